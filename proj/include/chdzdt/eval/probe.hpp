#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chdzdt/eval/datasets.hpp"
#include "chdzdt/eval/embedder.hpp"

namespace chdzdt::eval {

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Zero denominators give 0.
Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Iterative stratification over label-index lists. `fraction` is the train
// share. The rarest remaining label is handled first; each of its examples
// goes to the subset with the largest remaining demand for that label, then
// the largest overall demand, then a seeded coin.
Split stratified_split(const std::vector<std::vector<std::size_t>>& labels, std::size_t n_labels,
                       double fraction, std::uint64_t seed);

struct ProbeConfig {
  double train_fraction = 0.6;
  std::size_t epochs = 500;
  double lr = 0.5;
  double threshold = 0.5;
  std::uint64_t seed = 42;
};

struct AffixScore {
  std::string affix;
  std::size_t train_support = 0;
  std::size_t test_support = 0;
  bool excluded = false;  // absent from the training split
  Prf prf;
};

struct ProbeReport {
  std::vector<AffixScore> affixes;
  Prf macro;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::string> warnings;
};

// One-vs-rest logistic regression per affix (full-batch gradient descent on
// features standardized with training statistics), scored on the test rows.
// `labels[i][a]` is 1 when row i carries affix a. When `split` is null a
// stratified split is drawn.
ProbeReport probe_train(const Matrix& features, const std::vector<std::vector<std::uint8_t>>& labels,
                        const std::vector<std::string>& affix_names, const ProbeConfig& config,
                        const Split* split = nullptr);

// Embeds the words and probes for every affix in the rows (sorted by name).
ProbeReport probe_affixes(const Embedder& embedder, const std::vector<AffixRow>& rows,
                          const ProbeConfig& config);

}  // namespace chdzdt::eval
