#include "chdzdt/eval/noise.hpp"

#include <algorithm>
#include <set>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/utf8.hpp"

namespace chdzdt::eval {

ObfuscationTable ObfuscationTable::default_table() {
  ObfuscationTable t;
  const std::vector<std::pair<char32_t, std::u32string>> look_alike = {
      {U'a', U"@4"}, {U'e', U"3"},  {U'i', U"1!"}, {U'l', U"1|"}, {U'o', U"0"},
      {U's', U"$5"}, {U't', U"7+"}, {U'b', U"8"},  {U'g', U"9"},  {U'z', U"2"}};
  const std::vector<std::pair<char32_t, char32_t>> sound = {
      {U'a', U'ا'}, {U'b', U'ب'}, {U't', U'ت'}, {U'd', U'د'}, {U'r', U'ر'}, {U'z', U'ز'},
      {U's', U'س'}, {U'f', U'ف'}, {U'q', U'ق'}, {U'k', U'ك'}, {U'l', U'ل'}, {U'm', U'م'},
      {U'n', U'ن'}, {U'h', U'ه'}, {U'w', U'و'}, {U'y', U'ي'}, {U'j', U'ج'}, {U'3', U'ع'},
      {U'7', U'ح'}, {U'9', U'ق'}};
  for (const auto& [c, alts] : look_alike) {
    for (char32_t a : alts) t.add(c, a);
  }
  for (const auto& [latin, arabic] : sound) {
    t.add(latin, arabic);
    t.add(arabic, latin);
  }
  return t;
}

ObfuscationTable ObfuscationTable::parse(std::string_view text) {
  ObfuscationTable t;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    const auto from = utf8::decode(cols[0]);
    if (cols.size() != 2 || from.size() != 1) {
      throw InputError("obfuscation table line " + std::to_string(i + 1) +
                       ": expected one character TAB candidates");
    }
    for (const auto& cand : io::split(cols[1], ' ')) {
      if (cand.empty()) continue;
      const auto to = utf8::decode(cand);
      if (to.size() != 1) {
        throw InputError("obfuscation table line " + std::to_string(i + 1) + ": candidate '" +
                         cand + "' is not one character");
      }
      t.add(from[0], to[0]);
    }
  }
  return t;
}

void ObfuscationTable::add(char32_t from, char32_t to) {
  if (from == to) throw InputError("obfuscation table maps '" + utf8::encode(from) + "' to itself");
  auto& v = map_[from];
  if (std::find(v.begin(), v.end(), to) == v.end()) v.push_back(to);
}

const std::vector<char32_t>* ObfuscationTable::candidates(char32_t c) const {
  auto it = map_.find(c);
  return it == map_.end() ? nullptr : &it->second;
}

std::string obfuscate(std::string_view word, NoiseMode mode, std::size_t count,
                      const ObfuscationTable& table, Rng& rng) {
  auto cps = utf8::decode(word);
  if (count == 0 || cps.size() < count) {
    throw ContractError("cannot replace " + std::to_string(count) + " characters of '" +
                        std::string(word) + "'");
  }
  auto positions = sample_without_replacement(rng, cps.size(), count);
  std::sort(positions.begin(), positions.end());
  for (std::size_t p : positions) {
    switch (mode) {
      case NoiseMode::kStar: cps[p] = U'*'; break;
      case NoiseMode::kHash: cps[p] = U'#'; break;
      case NoiseMode::kSimilar: {
        const auto* cands = table.candidates(cps[p]);
        cps[p] = cands ? (*cands)[uniform_index(rng, cands->size())] : U'*';
        break;
      }
    }
  }
  return utf8::encode(cps);
}

std::vector<NoiseTuple> make_tuples(const std::vector<std::string>& words, NoiseMode mode,
                                    std::size_t count, const ObfuscationTable& table,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NoiseTuple> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back({w, obfuscate(w, mode, count, table, rng)});
  return out;
}

std::vector<Cluster> make_variant_clusters(const std::vector<std::string>& words,
                                           std::size_t variants, const ObfuscationTable& table,
                                           std::uint64_t seed) {
  Rng rng(seed);
  const NoiseMode modes[] = {NoiseMode::kStar, NoiseMode::kHash, NoiseMode::kSimilar};
  std::vector<Cluster> out;
  for (const auto& w : words) {
    Cluster c{w, {}};
    std::set<std::string> seen{w};
    // Short words may not have enough distinct variants; give up after a
    // bounded number of draws.
    for (std::size_t attempt = 0; c.members.size() < variants && attempt < 20 * variants; ++attempt) {
      auto v = obfuscate(w, modes[attempt % 3], 1, table, rng);
      if (seen.insert(v).second) c.members.push_back(std::move(v));
    }
    if (!c.members.empty()) out.push_back(std::move(c));
  }
  return out;
}

double tuple_acs(const Embedder& embedder, const std::vector<NoiseTuple>& tuples) {
  if (tuples.empty()) throw InputError("no noise tuples to evaluate");
  std::vector<std::string> words;
  words.reserve(2 * tuples.size());
  for (const auto& t : tuples) {
    words.push_back(t.clean);
    words.push_back(t.noisy);
  }
  const auto m = embedder.embed_all(words);
  double sum = 0;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto a = m.row(2 * i), b = m.row(2 * i + 1);
    if (norm(a) == 0) throw InputError("zero-norm embedding for '" + tuples[i].clean + "'");
    if (norm(b) == 0) throw InputError("zero-norm embedding for '" + tuples[i].noisy + "'");
    sum += cosine(a, b);
  }
  return sum / static_cast<double>(tuples.size());
}

NoiseReport noise_report(const Embedder& embedder,
                         const std::map<NoiseMode, std::vector<NoiseTuple>>& tuples,
                         const std::vector<Cluster>& variant_clusters, std::uint64_t seed) {
  NoiseReport r;
  for (const auto& [mode, rows] : tuples) {
    r.modes.push_back({mode, rows.size(), tuple_acs(embedder, rows)});
  }
  if (!variant_clusters.empty()) {
    r.has_variants = true;
    r.variants = cluster_report(embedder, variant_clusters, seed);
  }
  return r;
}

}  // namespace chdzdt::eval
