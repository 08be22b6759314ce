#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "chdzdt/eval/datasets.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/random.hpp"

namespace chdzdt::eval {

// Character -> replacement candidates. No character lists itself.
class ObfuscationTable {
 public:
  ObfuscationTable() = default;

  // Digit/symbol look-alikes (o->0, e->3, a->@, ...) and Latin<->Arabic
  // sound pairs (b<->ب, t<->ت, ...).
  static ObfuscationTable default_table();
  // "c TAB cand cand ..." per line. Throws InputError on self-mapping.
  static ObfuscationTable parse(std::string_view text);

  void add(char32_t from, char32_t to);
  const std::vector<char32_t>* candidates(char32_t c) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::map<char32_t, std::vector<char32_t>> map_;
};

// Replaces `count` distinct characters: '*' for star, '#' for hash, a table
// candidate for similar (star when the character has none). Throws
// ContractError when the word has fewer than `count` characters.
std::string obfuscate(std::string_view word, NoiseMode mode, std::size_t count,
                      const ObfuscationTable& table, Rng& rng);

// One noisy variant per word.
std::vector<NoiseTuple> make_tuples(const std::vector<std::string>& words, NoiseMode mode,
                                    std::size_t count, const ObfuscationTable& table,
                                    std::uint64_t seed);

// Each word becomes a cluster rooted at the clean form with `variants`
// distinct one-character variants (mixing the three modes).
std::vector<Cluster> make_variant_clusters(const std::vector<std::string>& words,
                                           std::size_t variants, const ObfuscationTable& table,
                                           std::uint64_t seed);

struct NoiseModeResult {
  NoiseMode mode = NoiseMode::kStar;
  std::size_t n = 0;
  double acs = 0;  // clean vs noisy
};

struct NoiseReport {
  std::vector<NoiseModeResult> modes;
  bool has_variants = false;
  ClusterReport variants;  // k-means ARI and intra-cluster ACS on variant clusters
};

NoiseReport noise_report(const Embedder& embedder,
                         const std::map<NoiseMode, std::vector<NoiseTuple>>& tuples,
                         const std::vector<Cluster>& variant_clusters, std::uint64_t seed);

// Mean clean/noisy cosine.
double tuple_acs(const Embedder& embedder, const std::vector<NoiseTuple>& tuples);

}  // namespace chdzdt::eval
