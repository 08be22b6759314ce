#include "chdzdt/chartok.hpp"

#include <algorithm>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/utf8.hpp"

namespace chdzdt {

namespace {

std::vector<CodeRange> parse_ranges(const nlohmann::json& j, const char* key) {
  std::vector<CodeRange> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) throw ConfigError(std::string("vocab spec: '") + key + "' must be a list");
  for (const auto& r : j.at(key)) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
      throw ConfigError(std::string("vocab spec: entries of '") + key + "' must be [lo, hi]");
    }
    const auto lo = r[0].get<std::int64_t>();
    const auto hi = r[1].get<std::int64_t>();
    if (lo < 0 || hi < 0 || lo > 0x10FFFF || hi > 0x10FFFF) {
      throw ConfigError("vocab spec: code point out of range in [" + std::to_string(lo) + "," +
                        std::to_string(hi) + "]");
    }
    out.push_back({static_cast<char32_t>(lo), static_cast<char32_t>(hi)});
  }
  return out;
}

nlohmann::json ranges_json(const std::vector<CodeRange>& ranges) {
  auto arr = nlohmann::json::array();
  for (const auto& r : ranges) arr.push_back({static_cast<std::uint32_t>(r.lo), static_cast<std::uint32_t>(r.hi)});
  return arr;
}

bool is_special_char(char32_t c) {
  return std::find(std::begin(kSpecialChars), std::end(kSpecialChars), c) != std::end(kSpecialChars);
}

bool in_ranges(const std::vector<CodeRange>& ranges, char32_t c) {
  // `ranges` is sorted and disjoint.
  auto it = std::upper_bound(ranges.begin(), ranges.end(), c,
                             [](char32_t v, const CodeRange& r) { return v < r.lo; });
  return it != ranges.begin() && c <= std::prev(it)->hi;
}

std::vector<CodeRange> merged(std::vector<CodeRange> ranges) {
  std::sort(ranges.begin(), ranges.end(),
            [](const CodeRange& a, const CodeRange& b) { return a.lo < b.lo; });
  std::vector<CodeRange> out;
  for (const auto& r : ranges) {
    if (!out.empty() && r.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, r.hi);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

std::size_t TokenizedWord::char_count() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < attention.size(); ++i) n += attention[i];
  return n;
}

VocabSpec VocabSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("vocab spec must be a JSON object");
  VocabSpec spec;
  spec.ranges = parse_ranges(j, "ranges");
  spec.emoji_ranges = parse_ranges(j, "emoji_ranges");
  if (j.contains("extras")) {
    if (!j.at("extras").is_array()) throw ConfigError("vocab spec: 'extras' must be a list");
    for (const auto& e : j.at("extras")) {
      if (!e.is_string()) throw ConfigError("vocab spec: extras must be strings");
      spec.extras.push_back(e.get<std::string>());
    }
  }
  return spec;
}

nlohmann::json VocabSpec::to_json() const {
  nlohmann::json j;
  j["ranges"] = ranges_json(ranges);
  j["extras"] = extras;
  j["emoji_ranges"] = ranges_json(emoji_ranges);
  return j;
}

VocabSpec VocabSpec::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("vocab spec " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

VocabSpec VocabSpec::default_spec() {
  VocabSpec spec;
  spec.ranges = {
      {0x0020, 0x007E},    // Basic Latin (printable)
      {0x00A0, 0x00FF},    // Latin-1 Supplement
      {0x0100, 0x017F},    // Latin Extended-A
      {0x0180, 0x024F},    // Latin Extended-B
      {0x0250, 0x02AF},    // IPA Extensions
      {0x0600, 0x06FF},    // Arabic
      {0x0750, 0x077F},    // Arabic Supplement
      {0x1E00, 0x1EFF},    // Latin Extended Additional
      {0x2000, 0x206F},    // General Punctuation
      {0x20A0, 0x20BF},    // Currency Symbols
      {0x2190, 0x21FF},    // Arrows
      {0x2300, 0x23FF},    // Miscellaneous Technical
      {0x25A0, 0x25FF},    // Geometric Shapes
      {0x2600, 0x26FF},    // Miscellaneous Symbols
      {0x2700, 0x27BF},    // Dingbats
      {0x2D30, 0x2D7F},    // Tifinagh
      {0xFE00, 0xFE0F},    // Variation Selectors
      {0x1F1E6, 0x1F1FF},  // Regional indicators
      {0x1F300, 0x1F5FF},  // Miscellaneous Symbols and Pictographs
      {0x1F600, 0x1F64F},  // Emoticons
      {0x1F680, 0x1F6FF},  // Transport and Map Symbols
      {0x1F900, 0x1F9FF},  // Supplemental Symbols and Pictographs
      {0x1FA70, 0x1FAFF},  // Symbols and Pictographs Extended-A
  };
  spec.emoji_ranges = {
      {0x2300, 0x23FF},  {0x2600, 0x26FF},  {0x2700, 0x27BF},  {0x1F1E6, 0x1F1FF},
      {0x1F300, 0x1F5FF}, {0x1F600, 0x1F64F}, {0x1F680, 0x1F6FF}, {0x1F900, 0x1F9FF},
      {0x1FA70, 0x1FAFF},
  };
  return spec;
}

CharVocab CharVocab::build(const VocabSpec& spec) {
  CharVocab v;
  v.spec_ = spec;
  for (const auto& r : spec.ranges) {
    if (r.lo > r.hi) {
      throw ConfigError("vocab spec: range [" + std::to_string(r.lo) + "," + std::to_string(r.hi) +
                        "] has lo > hi");
    }
  }
  auto domain = merged(spec.ranges);
  std::vector<char32_t> chars;
  for (const auto& r : domain) {
    for (char32_t c = r.lo; c <= r.hi; ++c) {
      if (!utf8::is_scalar(c)) {
        throw ConfigError("vocab spec: range contains non-scalar code point " + std::to_string(c));
      }
      if (is_special_char(c)) {
        throw ConfigError("vocab spec: range covers reserved special code point " + std::to_string(c));
      }
      chars.push_back(c);
    }
  }
  for (const auto& e : spec.extras) {
    std::u32string cps;
    try {
      cps = utf8::decode(e);
    } catch (const Error&) {
      throw ConfigError("vocab spec: extra is not valid UTF-8");
    }
    for (char32_t c : cps) {
      if (is_special_char(c)) throw ConfigError("vocab spec: extra uses a reserved special code point");
      chars.push_back(c);
    }
  }
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());

  v.chars_.assign(std::begin(kSpecialChars), std::end(kSpecialChars));
  v.chars_.insert(v.chars_.end(), chars.begin(), chars.end());
  v.index_.reserve(v.chars_.size());
  for (std::size_t i = 0; i < v.chars_.size(); ++i) {
    v.index_.emplace(v.chars_[i], static_cast<std::int32_t>(i));
  }
  v.emoji_ = merged(spec.emoji_ranges);
  return v;
}

bool CharVocab::is_emoji(char32_t c) const { return in_ranges(emoji_, c); }

std::int32_t CharVocab::id_of(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

char32_t CharVocab::char_of(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= chars_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside [0," +
                     std::to_string(chars_.size()) + ")");
  }
  return chars_[static_cast<std::size_t>(id)];
}

TokenizedWord CharVocab::encode_word(std::string_view word, std::size_t max_chars) const {
  const auto trimmed = io::trim(word);
  if (trimmed.empty()) throw InputError("cannot encode an empty word");
  const std::u32string cps = utf8::decode(trimmed);
  TokenizedWord t;
  t.ids.assign(1 + max_chars, kPad);
  t.attention.assign(1 + max_chars, 0);
  t.ids[0] = kCls;
  t.attention[0] = 1;
  t.original_length = cps.size();
  const std::size_t n = std::min(cps.size(), max_chars);
  for (std::size_t i = 0; i < n; ++i) {
    t.ids[1 + i] = id_of(cps[i]);
    t.attention[1 + i] = 1;
  }
  return t;
}

std::string CharVocab::decode(std::span<const std::int32_t> ids) const {
  std::string out;
  for (auto id : ids) {
    const char32_t c = char_of(id);
    if (id < kNumSpecials) continue;
    utf8::append(out, c);
  }
  return out;
}

}  // namespace chdzdt
