#include "chdzdt/eval/datasets.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt::eval {

namespace {

[[noreturn]] void bad_row(std::string_view source, std::size_t line, const std::string& why) {
  throw InputError(std::string(source) + ":" + std::to_string(line) + ": " + why);
}

std::string trimmed(std::string_view s) { return std::string(io::trim(s)); }

// Visits non-blank lines with their 1-based numbers.
template <typename F>
void for_rows(std::string_view text, F&& f) {
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    f(i + 1, io::split(lines[i], '\t'));
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string format_score(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

}  // namespace

std::string_view to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::kStar: return "star";
    case NoiseMode::kHash: return "hash";
    case NoiseMode::kSimilar: return "similar";
  }
  return "?";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "star") return NoiseMode::kStar;
  if (name == "hash") return NoiseMode::kHash;
  if (name == "similar" || name == "sim") return NoiseMode::kSimilar;
  throw InputError("unknown noise mode '" + std::string(name) + "' (star, hash, similar)");
}

std::vector<Cluster> parse_clusters(std::string_view text, std::string_view source) {
  std::vector<Cluster> out;
  std::set<std::string> roots;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() < 2) bad_row(source, line, "expected root TAB member [TAB member ...]");
    Cluster c{trimmed(cols[0]), {}};
    if (c.root.empty()) bad_row(source, line, "empty root");
    if (!roots.insert(c.root).second) bad_row(source, line, "duplicate root '" + c.root + "'");
    for (std::size_t i = 1; i < cols.size(); ++i) {
      auto m = trimmed(cols[i]);
      if (!m.empty()) c.members.push_back(std::move(m));
    }
    if (c.members.empty()) bad_row(source, line, "cluster '" + c.root + "' has no members");
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<NoiseTuple> parse_tuples(std::string_view text, std::string_view source) {
  std::vector<NoiseTuple> out;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() != 2) bad_row(source, line, "expected clean TAB noisy");
    NoiseTuple t{trimmed(cols[0]), trimmed(cols[1])};
    if (t.clean.empty() || t.noisy.empty()) bad_row(source, line, "empty word");
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<AffixRow> parse_affixes(std::string_view text, std::string_view source) {
  std::vector<AffixRow> out;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() != 2) bad_row(source, line, "expected word TAB affix,affix");
    AffixRow r{trimmed(cols[0]), {}};
    if (r.word.empty()) bad_row(source, line, "empty word");
    for (const auto& a : io::split(cols[1], ',')) {
      auto t = trimmed(a);
      if (!t.empty()) r.affixes.push_back(std::move(t));
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<SimilarityPair> parse_similarity(std::string_view text, std::string_view source) {
  std::vector<SimilarityPair> out;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() != 3) bad_row(source, line, "expected w1 TAB w2 TAB score");
    SimilarityPair p{trimmed(cols[0]), trimmed(cols[1]), 0};
    const auto s = io::trim(cols[2]);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p.score);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(p.score)) {
      bad_row(source, line, "bad score '" + std::string(s) + "'");
    }
    if (p.w1.empty() || p.w2.empty()) bad_row(source, line, "empty word");
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<TaggedSentence> parse_pos(std::string_view text, std::string_view source) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) {
      if (!cur.tokens.empty()) out.push_back(std::move(cur));
      cur = {};
      continue;
    }
    const auto cols = io::split(lines[i], '\t');
    if (cols.size() != 2) bad_row(source, i + 1, "expected word TAB tag");
    auto w = trimmed(cols[0]), t = trimmed(cols[1]);
    if (w.empty() || t.empty()) bad_row(source, i + 1, "empty word or tag");
    cur.tokens.emplace_back(std::move(w), std::move(t));
  }
  if (!cur.tokens.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<MorphRow> parse_morph(std::string_view text, std::string_view source) {
  std::vector<MorphRow> out;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() != 2) bad_row(source, line, "expected word TAB feature=value;...");
    MorphRow r{trimmed(cols[0]), {}};
    if (r.word.empty()) bad_row(source, line, "empty word");
    for (const auto& kv : io::split(cols[1], ';')) {
      if (io::trim(kv).empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) bad_row(source, line, "feature '" + kv + "' has no '='");
      auto f = trimmed(std::string_view(kv).substr(0, eq));
      auto v = trimmed(std::string_view(kv).substr(eq + 1));
      if (f.empty() || v.empty()) bad_row(source, line, "empty feature name or value");
      if (!r.features.emplace(f, v).second) bad_row(source, line, "feature '" + f + "' repeated");
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<SentimentExample> parse_sentiment(std::string_view text, std::string_view source) {
  std::vector<SentimentExample> out;
  for_rows(text, [&](std::size_t line, std::vector<std::string> cols) {
    if (cols.size() < 2) bad_row(source, line, "expected label TAB text");
    SentimentExample e{trimmed(cols[0]), {}};
    // Tabs inside the text are kept as spaces.
    std::vector<std::string> rest(cols.begin() + 1, cols.end());
    e.text = trimmed(join(rest, " "));
    if (e.label.empty()) bad_row(source, line, "empty label");
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<Cluster> load_clusters(const std::filesystem::path& path) {
  return parse_clusters(io::read_file(path), path.string());
}

std::pair<NoiseMode, std::vector<NoiseTuple>> load_tuples(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  NoiseMode mode;
  try {
    mode = parse_noise_mode(ext);
  } catch (const InputError&) {
    throw InputError(path.string() + ": tuple files must end in .star, .hash or .sim");
  }
  return {mode, parse_tuples(io::read_file(path), path.string())};
}

std::vector<AffixRow> load_affixes(const std::filesystem::path& path) {
  return parse_affixes(io::read_file(path), path.string());
}
std::vector<SimilarityPair> load_similarity(const std::filesystem::path& path) {
  return parse_similarity(io::read_file(path), path.string());
}
std::vector<TaggedSentence> load_pos(const std::filesystem::path& path) {
  return parse_pos(io::read_file(path), path.string());
}
std::vector<MorphRow> load_morph(const std::filesystem::path& path) {
  return parse_morph(io::read_file(path), path.string());
}
std::vector<SentimentExample> load_sentiment(const std::filesystem::path& path) {
  return parse_sentiment(io::read_file(path), path.string());
}

std::string format_clusters(const std::vector<Cluster>& clusters) {
  std::string out;
  for (const auto& c : clusters) {
    out += c.root;
    for (const auto& m : c.members) out += "\t" + m;
    out += '\n';
  }
  return out;
}

std::string format_tuples(const std::vector<NoiseTuple>& tuples) {
  std::string out;
  for (const auto& t : tuples) out += t.clean + "\t" + t.noisy + "\n";
  return out;
}

std::string format_affixes(const std::vector<AffixRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.word + "\t" + join(r.affixes, ",") + "\n";
  return out;
}

std::string format_similarity(const std::vector<SimilarityPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += p.w1 + "\t" + p.w2 + "\t" + format_score(p.score) + "\n";
  return out;
}

std::string format_pos(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s) out += '\n';
    for (const auto& [w, t] : sentences[s].tokens) out += w + "\t" + t + "\n";
  }
  return out;
}

std::string format_morph(const std::vector<MorphRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    std::vector<std::string> kv;
    for (const auto& [f, v] : r.features) kv.push_back(f + "=" + v);
    out += r.word + "\t" + join(kv, ";") + "\n";
  }
  return out;
}

std::string format_sentiment(const std::vector<SentimentExample>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.label + "\t" + r.text + "\n";
  return out;
}

}  // namespace chdzdt::eval
