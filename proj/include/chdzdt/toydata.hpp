#pragma once

// Seeded synthetic datasets used by the acceptance checks, the tests and
// `chdzdt toy-data`.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chdzdt/eval/datasets.hpp"
#include "chdzdt/preprocess.hpp"

namespace chdzdt::toy {

// A concatenative language: every word is prefix + root + suffix with one of
// the two affix parts empty.
struct RootAffixLanguage {
  std::vector<std::string> roots;
  std::vector<std::string> affixes;  // "-ek" suffix, "m-" prefix
  std::vector<std::vector<std::string>> words;  // [root][affix]

  static RootAffixLanguage generate(std::size_t n_roots, std::size_t n_affixes, std::uint64_t seed);
  static std::string apply(const std::string& root, const std::string& affix);
};

// 500 words by default: the 20x10 root+affix language (DZ), an Arabic-script
// pattern language (AR), a Latin-script second language (FR), with a share of
// words carrying two labels.
Lexicon trilingual_lexicon(std::uint64_t seed, std::size_t n_words = 500,
                           RootAffixLanguage* morph = nullptr);

using eval::Cluster;
using eval::SentimentExample;
using eval::TaggedSentence;

std::vector<Cluster> root_clusters(const RootAffixLanguage& lang);

// Tag is a function of the word's final marker ("NOUN" for -a words, "VERB"
// for -i words, ...).
std::vector<TaggedSentence> suffix_pos(std::size_t n_sentences, std::uint64_t seed,
                                       std::size_t min_len = 3, std::size_t max_len = 8);

// Filler words plus exactly one marker word that decides the label.
std::vector<SentimentExample> marker_sentiment(std::size_t n, std::uint64_t seed);

// Row-major [n, d] points and per-row affix sets (bit per affix) that are
// linearly separable: affix j is present iff coordinate j exceeds zero, with
// a margin.
struct ProbeFixture {
  std::size_t dim = 0;
  std::size_t n_affixes = 0;
  std::vector<double> points;
  std::vector<std::vector<std::uint8_t>> labels;  // [n][n_affixes]
};

ProbeFixture separable_affixes(std::size_t n, std::size_t n_affixes, std::size_t dim,
                               std::uint64_t seed);

}  // namespace chdzdt::toy
