#include "chdzdt/preprocess.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/utf8.hpp"
#include "default_rules.inc"

namespace chdzdt {

namespace {

constexpr char32_t kTatweel = 0x0640;
constexpr char32_t kZwj = 0x200D;

bool is_digit(char32_t c) { return (c >= '0' && c <= '9') || (c >= 0x0660 && c <= 0x0669) || (c >= 0x06F0 && c <= 0x06F9); }
bool is_alnum(char32_t c) { return is_letter(c) || is_digit(c); }

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

bool is_skin_tone(char32_t c) { return c >= 0x1F3FB && c <= 0x1F3FF; }
bool is_regional(char32_t c) { return c >= 0x1F1E6 && c <= 0x1F1FF; }

bool in_sorted_ranges(const std::vector<CodeRange>& ranges, char32_t c) {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), c,
                             [](char32_t v, const CodeRange& r) { return v < r.lo; });
  return it != ranges.begin() && c <= std::prev(it)->hi;
}

std::vector<CodeRange> sorted_ranges(std::vector<CodeRange> r) {
  std::sort(r.begin(), r.end(), [](const CodeRange& a, const CodeRange& b) { return a.lo < b.lo; });
  std::vector<CodeRange> out;
  for (const auto& x : r) {
    if (!out.empty() && x.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, x.hi);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

char32_t single_char(const std::string& s, const char* what) {
  std::u32string cps;
  try {
    cps = utf8::decode(s);
  } catch (const Error&) {
    throw ConfigError(std::string("rules: ") + what + " is not valid UTF-8");
  }
  if (cps.size() != 1) {
    throw ConfigError(std::string("rules: ") + what + " '" + s + "' must be a single character");
  }
  return cps[0];
}

// End (exclusive) of the emoji unit starting at i: the base code point plus
// variation selectors, skin-tone modifiers and ZWJ-joined emoji.
template <typename IsEmoji>
std::size_t emoji_unit_end(const std::u32string& s, std::size_t i, IsEmoji is_emoji) {
  std::size_t j = i + 1;
  if (is_regional(s[i]) && j < s.size() && is_regional(s[j])) return j + 1;
  while (true) {
    while (j < s.size() && (s[j] == 0xFE0F || s[j] == 0xFE0E || is_skin_tone(s[j]))) ++j;
    if (j + 1 < s.size() && s[j] == kZwj && is_emoji(s[j + 1])) {
      j += 2;
      continue;
    }
    return j;
  }
}

std::string collapse_spaces(const std::u32string& s) {
  std::string out;
  bool pending = false;
  for (char32_t c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    utf8::append(out, c);
  }
  return out;
}

std::string cap_runs(const std::u32string& cps, std::size_t k, const std::vector<char32_t>& transparent) {
  auto is_transparent = [&](char32_t c) {
    return c == kTatweel || std::find(transparent.begin(), transparent.end(), c) != transparent.end();
  };
  std::u32string out;
  out.reserve(cps.size());
  char32_t last = 0;
  std::size_t run = 0;
  bool dropping = false;
  for (char32_t c : cps) {
    if (is_transparent(c)) {
      if (!dropping) out.push_back(c);
      continue;
    }
    if (is_letter(c) && run > 0 && c == last) {
      ++run;
    } else {
      last = c;
      run = is_letter(c) ? 1 : 0;
    }
    dropping = run > k;
    if (!dropping) out.push_back(c);
  }
  return utf8::encode(out);
}

}  // namespace

bool is_letter(char32_t c) {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x250 && c <= 0x2AF) return true;                          // IPA
  if (c >= 0x370 && c <= 0x52F) return c != 0x37E && c != 0x387;      // Greek, Cyrillic
  if (c >= 0x620 && c <= 0x64A) return c != 0x640;                     // Arabic letters, not tatweel
  if (c >= 0x66E && c <= 0x6D3) return true;
  if (c == 0x6D5 || c == 0x6EE || c == 0x6EF || (c >= 0x6FA && c <= 0x6FF)) return true;
  if (c >= 0x750 && c <= 0x77F) return true;
  if (c >= 0x1E00 && c <= 0x1EFF) return true;
  if (c >= 0x2D30 && c <= 0x2D67) return true;                        // Tifinagh
  return false;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x060C: case 0x061B: case 0x061E: case 0x061F: case 0x066A: case 0x066B:
    case 0x066C: case 0x066D: case 0x06D4:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || (c >= 0x2E00 && c <= 0x2E7F);
}

// ---------------------------------------------------------------------------
// Rules

NormRules NormRules::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("rules must be a JSON object");
  NormRules r;
  try {
    if (j.contains("emoji_aliases")) {
      for (const auto& [k, v] : j.at("emoji_aliases").items()) {
        if (k.empty()) throw ConfigError("rules: empty emoji alias");
        r.emoji_aliases[k] = v.get<std::string>();
      }
    }
    if (j.contains("unify")) {
      for (const auto& [k, v] : j.at("unify").items()) {
        const char32_t c = single_char(k, "unify key");
        if (!r.unify.emplace(c, v.get<std::string>()).second) {
          throw ConfigError("rules: conflicting unify entries for '" + k + "'");
        }
      }
    }
    if (j.contains("diacritics")) {
      for (const auto& d : j.at("diacritics")) r.diacritics.push_back(single_char(d.get<std::string>(), "diacritic"));
    }
    r.elongation_cap = j.value("elongation_cap", r.elongation_cap);
    r.emoji_cap = j.value("emoji_cap", r.emoji_cap);
    if (j.contains("region_patterns")) {
      r.region_patterns = j.at("region_patterns").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("rules: ") + e.what());
  }
  if (r.elongation_cap == 0 || r.emoji_cap == 0) throw ConfigError("rules: caps must be >= 1");
  return r;
}

nlohmann::json NormRules::to_json() const {
  nlohmann::json j;
  j["emoji_aliases"] = emoji_aliases;
  auto unify_j = nlohmann::json::object();
  for (const auto& [k, v] : unify) unify_j[utf8::encode(k)] = v;
  j["unify"] = unify_j;
  auto dia = nlohmann::json::array();
  for (char32_t c : diacritics) dia.push_back(utf8::encode(c));
  j["diacritics"] = dia;
  j["elongation_cap"] = elongation_cap;
  j["emoji_cap"] = emoji_cap;
  j["region_patterns"] = region_patterns;
  return j;
}

NormRules NormRules::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("rules " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

NormRules NormRules::default_rules() { return from_json(nlohmann::json::parse(kDefaultRulesJson)); }

// ---------------------------------------------------------------------------
// Normalizer

Normalizer::Normalizer(NormRules rules, const VocabSpec& vocab_spec)
    : rules_(std::move(rules)), emoji_(sorted_ranges(vocab_spec.emoji_ranges)) {
  if (rules_.elongation_cap == 0 || rules_.emoji_cap == 0) throw ConfigError("rules: caps must be >= 1");
  for (const auto& p : rules_.region_patterns) {
    try {
      patterns_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError("rules: malformed region pattern '" + p + "': " + e.what());
    }
  }
}

bool Normalizer::is_emoji(char32_t c) const {
  return in_sorted_ranges(emoji_, c) && !is_skin_tone(c);
}

bool Normalizer::region_keep(std::string_view line) const {
  for (const auto& re : patterns_) {
    if (std::regex_search(line.begin(), line.end(), re)) return false;
  }
  return true;
}

std::string Normalizer::normalize_emojis(std::string_view text) const {
  const std::u32string in = utf8::decode_lossy(text);

  // Aliases, longest first. Matching sees the text through single-character
  // unification so that running the pipeline again finds nothing new.
  std::vector<std::pair<std::u32string, std::u32string>> aliases;
  for (const auto& [k, v] : rules_.emoji_aliases) aliases.emplace_back(utf8::decode(k), utf8::decode(v));
  std::stable_sort(aliases.begin(), aliases.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  auto view = [&](char32_t c) {
    auto it = rules_.unify.find(c);
    if (it != rules_.unify.end()) {
      const auto u = utf8::decode(it->second);
      if (u.size() == 1) return u[0];
    }
    return c;
  };

  std::u32string aliased;
  for (std::size_t i = 0; i < in.size();) {
    bool matched = false;
    for (const auto& [key, value] : aliases) {
      if (i + key.size() > in.size()) continue;
      bool eq = true;
      for (std::size_t t = 0; t < key.size() && eq; ++t) eq = view(in[i + t]) == key[t];
      if (!eq) continue;
      if (is_alnum(key.front()) && i > 0 && is_alnum(in[i - 1])) continue;
      if (is_alnum(key.back()) && i + key.size() < in.size() && is_alnum(in[i + key.size()])) continue;
      aliased += value;
      i += key.size();
      matched = true;
      break;
    }
    if (!matched) aliased.push_back(in[i++]);
  }

  // Cap runs of identical emoji units. Whitespace, tatweel and diacritics do
  // not interrupt a run; whitespace in front of a dropped unit goes with it.
  auto transparent = [&](char32_t c) {
    return c == kTatweel ||
           std::find(rules_.diacritics.begin(), rules_.diacritics.end(), c) != rules_.diacritics.end();
  };
  auto emoji_pred = [this](char32_t c) { return is_emoji(c); };
  std::u32string out, pending, last;
  std::size_t run = 0;
  for (std::size_t i = 0; i < aliased.size();) {
    const char32_t c = aliased[i];
    if (is_space(c) || transparent(c)) {
      pending.push_back(c);
      ++i;
      continue;
    }
    if (is_emoji(c)) {
      const std::size_t end = emoji_unit_end(aliased, i, emoji_pred);
      std::u32string unit = aliased.substr(i, end - i);
      i = end;
      if (run > 0 && unit == last) {
        ++run;
      } else {
        last = unit;
        run = 1;
      }
      if (run > rules_.emoji_cap) {
        pending.clear();
        continue;
      }
      out += pending;
      pending.clear();
      out += unit;
      continue;
    }
    run = 0;
    out += pending;
    pending.clear();
    out.push_back(c);
    ++i;
  }
  out += pending;
  return utf8::encode(out);
}

std::string Normalizer::normalize_chars(std::string_view text) const {
  std::string out;
  for (char32_t c : utf8::decode_lossy(text)) {
    auto it = rules_.unify.find(c);
    if (it != rules_.unify.end()) {
      out += it->second;
    } else {
      utf8::append(out, c);
    }
  }
  return out;
}

std::string Normalizer::cap_elongation(std::string_view text) const {
  return cap_runs(utf8::decode_lossy(text), rules_.elongation_cap, rules_.diacritics);
}

std::string Normalizer::fix_spacing(std::string_view text) const {
  const std::u32string s = utf8::decode_lossy(text);
  enum class Kind { kNone, kWord, kPunct };
  std::vector<std::u32string> tokens;
  std::u32string cur;
  Kind kind = Kind::kNone;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
    kind = Kind::kNone;
  };
  auto emoji_pred = [this](char32_t c) { return is_emoji(c); };
  for (std::size_t i = 0; i < s.size();) {
    const char32_t c = s[i];
    if (is_space(c)) {
      flush();
      ++i;
    } else if (is_emoji(c)) {
      flush();
      const std::size_t end = emoji_unit_end(s, i, emoji_pred);
      tokens.push_back(s.substr(i, end - i));
      i = end;
    } else if (is_punct(c)) {
      const bool has_next = i + 1 < s.size();
      const bool word_before = kind == Kind::kWord && !cur.empty();
      const bool joins_letters = (c == '\'' || c == '-') && word_before && is_letter(cur.back()) &&
                                 has_next && is_letter(s[i + 1]);
      const bool joins_digits = (c == '.' || c == ',') && word_before && is_digit(cur.back()) &&
                                has_next && is_digit(s[i + 1]);
      if (joins_letters || joins_digits) {
        cur.push_back(c);
      } else {
        if (kind != Kind::kPunct) flush();
        kind = Kind::kPunct;
        cur.push_back(c);
      }
      ++i;
    } else {
      if (kind != Kind::kWord) flush();
      kind = Kind::kWord;
      cur.push_back(c);
      ++i;
    }
  }
  flush();
  std::string out;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (t) out += ' ';
    out += utf8::encode(tokens[t]);
  }
  return out;
}

std::string Normalizer::strip_diacritics(std::string_view text) const {
  std::string out;
  for (char32_t c : utf8::decode_lossy(text)) {
    if (c == kTatweel) continue;
    if (std::find(rules_.diacritics.begin(), rules_.diacritics.end(), c) != rules_.diacritics.end()) continue;
    utf8::append(out, c);
  }
  return out;
}

std::string Normalizer::normalize(std::string_view text) const {
  std::string t = normalize_emojis(text);
  t = normalize_chars(t);
  t = cap_elongation(t);
  t = fix_spacing(t);
  t = strip_diacritics(t);
  return collapse_spaces(utf8::decode_lossy(t));
}

std::vector<std::string> Normalizer::process_line(std::string_view line, SourceKind kind) const {
  if (kind == SourceKind::kSocial && !region_keep(line)) return {};
  std::vector<std::string> words;
  for (auto& w : io::split(normalize(line), ' ')) {
    if (!w.empty()) words.push_back(std::move(w));
  }
  return words;
}

std::string cap_elongation(std::string_view text, std::size_t k) {
  if (k == 0) throw ConfigError("elongation cap must be >= 1");
  static const NormRules defaults = NormRules::default_rules();
  return cap_runs(utf8::decode_lossy(text), k, defaults.diacritics);
}

// ---------------------------------------------------------------------------
// Lexicon

void LexiconBuilder::add(std::string_view word, Lang label, std::uint64_t count) {
  if (word.empty() || !utf8::is_valid(word)) return;
  const auto cps = utf8::decode(word);
  if (cps.size() > max_len_) return;
  if (std::any_of(cps.begin(), cps.end(), is_space)) return;
  auto it = entries_.find(word);
  if (it == entries_.end()) {
    it = entries_.emplace(std::string(word), LexiconEntry{std::string(word), 0, {}}).first;
  }
  it->second.labels |= bit(label);
  it->second.counts[static_cast<std::size_t>(label)] += count;
}

void LexiconBuilder::merge(const LexiconBuilder& other) {
  for (const auto& [w, e] : other.entries_) {
    for (std::size_t l = 0; l < kNumLangs; ++l) {
      if (e.labels & (1u << l)) add(w, static_cast<Lang>(l), e.counts[l]);
    }
  }
}

Lexicon LexiconBuilder::finish() const {
  Lexicon out;
  out.reserve(entries_.size());
  for (const auto& [w, e] : entries_) out.push_back(e);
  return out;
}

Lexicon build_lexicon(const std::vector<SourceStream>& streams, const Normalizer& normalizer,
                      std::size_t max_len) {
  if (streams.empty()) throw InputError("build_lexicon: no input streams");
  LexiconBuilder builder(max_len);
  for (const auto& s : streams) {
    std::vector<std::string> lines;
    try {
      lines = io::read_lines(s.path);
    } catch (const IoError& e) {
      throw IoError("source '" + (s.name.empty() ? s.path.string() : s.name) + "': " + e.what());
    }
    for (const auto& line : lines) {
      for (const auto& w : normalizer.process_line(line, s.kind)) builder.add(w, s.label);
    }
  }
  return builder.finish();
}

std::string lexicon_to_tsv(const Lexicon& lexicon) {
  std::string out;
  for (const auto& e : lexicon) {
    out += e.word;
    out += '\t';
    out += format_labels(e.labels);
    out += '\t';
    bool first = true;
    for (std::size_t l = 0; l < kNumLangs; ++l) {
      if (!(e.labels & (1u << l))) continue;
      if (!first) out += ',';
      first = false;
      out += kLangCodes[l];
      out += ':';
      out += std::to_string(e.counts[l]);
    }
    out += '\n';
  }
  return out;
}

Lexicon lexicon_from_tsv(std::string_view text) {
  LexiconBuilder builder(std::numeric_limits<std::size_t>::max());
  std::size_t lineno = 0;
  for (const auto& line : io::split_lines(text)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = io::split(line, '\t');
    if (cols.size() < 2 || cols[0].empty()) {
      throw InputError("lexicon line " + std::to_string(lineno) + ": expected word<TAB>labels");
    }
    const LabelSet labels = parse_labels(cols[1]);
    std::array<std::uint64_t, kNumLangs> counts{};
    if (cols.size() >= 3 && !cols[2].empty()) {
      for (const auto& part : io::split(cols[2], ',')) {
        const auto kv = io::split(part, ':');
        const auto lang = kv.size() == 2 ? parse_lang(kv[0]) : std::nullopt;
        if (!lang) throw InputError("lexicon line " + std::to_string(lineno) + ": bad count '" + part + "'");
        try {
          counts[static_cast<std::size_t>(*lang)] = std::stoull(kv[1]);
        } catch (const std::exception&) {
          throw InputError("lexicon line " + std::to_string(lineno) + ": bad count '" + part + "'");
        }
      }
    }
    for (std::size_t l = 0; l < kNumLangs; ++l) {
      if (labels & (1u << l)) builder.add(cols[0], static_cast<Lang>(l), counts[l]);
    }
  }
  return builder.finish();
}

Lexicon load_lexicon(const std::filesystem::path& path) { return lexicon_from_tsv(io::read_file(path)); }

LexiconStats lexicon_stats(const Lexicon& lexicon, std::size_t bin_width, std::size_t max_len) {
  if (bin_width == 0) throw ConfigError("lexicon_stats: bin width must be >= 1");
  LexiconStats st;
  st.bin_width = bin_width;
  st.length_bins.assign((max_len + bin_width - 1) / bin_width + 1, 0);
  for (const auto& e : lexicon) {
    ++st.combos[e.labels & 31u];
    const std::size_t len = utf8::length(e.word);
    const std::size_t bin = len == 0 ? 0 : std::min((len - 1) / bin_width, st.length_bins.size() - 1);
    ++st.length_bins[bin];
    ++st.total;
  }
  // Drop the overflow bin when it is empty, keeping the 5-char grid clean.
  if (st.length_bins.back() == 0) st.length_bins.pop_back();
  return st;
}

nlohmann::json LexiconStats::to_json() const {
  nlohmann::json j;
  auto combos_j = nlohmann::json::object();
  for (unsigned s = 1; s < 32; ++s) combos_j[format_labels(static_cast<LabelSet>(s))] = combos[s];
  j["combinations"] = combos_j;
  j["length_bins"] = length_bins;
  j["total"] = total;
  return j;
}

std::string LexiconStats::to_table() const {
  std::ostringstream ss;
  ss << std::left << std::setw(20) << "labels" << std::right << std::setw(10) << "words" << '\n';
  for (unsigned s = 1; s < 32; ++s) {
    ss << std::left << std::setw(20) << format_labels(static_cast<LabelSet>(s)) << std::right
       << std::setw(10) << combos[s] << '\n';
  }
  ss << std::left << std::setw(20) << "total" << std::right << std::setw(10) << total << "\n\n";
  ss << std::left << std::setw(20) << "length" << std::right << std::setw(10) << "words" << '\n';
  for (std::size_t b = 0; b < length_bins.size(); ++b) {
    std::string range = std::to_string(b * bin_width + 1) + "-" + std::to_string((b + 1) * bin_width);
    ss << std::left << std::setw(20) << range << std::right << std::setw(10) << length_bins[b] << '\n';
  }
  return ss.str();
}

}  // namespace chdzdt
