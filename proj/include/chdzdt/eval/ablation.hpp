#pragma once

// Trains a list of encoder variants on one lexicon and evaluates each on the
// same datasets, producing one metric x variant table.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chdzdt/encoder.hpp"
#include "chdzdt/eval/downstream.hpp"
#include "chdzdt/eval/noise.hpp"
#include "chdzdt/eval/probe.hpp"
#include "chdzdt/pretrain.hpp"

namespace chdzdt::eval {

// The seven N x H x d variants: N in {1,2,3} at 2x16, H in {1,2,4} at N=2
// d=16, d in {8,16,32} at 2x2. Other fields come from `base`.
std::vector<ModelConfig> default_grid(const ModelConfig& base);

// A grid file is a JSON array of (partial) ModelConfig objects, each merged
// over `base`, or {"base": {...}, "variants": [...]}.
std::vector<ModelConfig> parse_grid(const nlohmann::json& j, const ModelConfig& base);

struct EvalBundle {
  std::vector<Cluster> clusters;                             // "morph"
  std::map<NoiseMode, std::vector<NoiseTuple>> noise_tuples;  // "noise"
  std::vector<Cluster> noise_clusters;
  std::vector<AffixRow> affixes;  // "probe"
  std::vector<TaggedSentence> pos_train, pos_test;  // "pos"
  std::vector<SentimentExample> sa_train, sa_test;  // "sa"
  ProbeConfig probe_config;
  DecoderConfig pos_config = DecoderConfig::pos();
  DecoderConfig sa_config = DecoderConfig::sentiment();
  std::uint64_t seed = 42;
};

// Every eval name understood by the sweep.
const std::vector<std::string>& ablation_evals();

struct VariantResult {
  std::string name;
  ModelConfig config;
  std::size_t params = 0;
  double seconds = 0;
  double samples_per_sec = 0;
  double final_loss = 0;
  bool trained = false;
  std::string error;  // training failure
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> failed;  // metric -> reason
};

struct AblationReport {
  std::vector<std::string> metrics;  // columns in order
  std::vector<VariantResult> variants;

  bool all_ok() const;
  nlohmann::json to_json(bool timing = true) const;
  std::string to_csv(bool timing = true) const;
  std::string to_table() const;
};

struct AblationHooks {
  // <dir>/<variant>.chdz and <dir>/<variant>.log.jsonl when set.
  std::optional<std::filesystem::path> out_dir;
  std::ostream* progress = nullptr;
};

// A variant whose training or evaluation throws is recorded as failed and
// the sweep moves on.
AblationReport ablation_sweep(const std::vector<ModelConfig>& grid, const Lexicon& lexicon,
                              std::shared_ptr<const CharVocab> vocab, const TrainConfig& train_config,
                              const std::vector<std::string>& evals, const EvalBundle& bundle,
                              const AblationHooks& hooks = {});

}  // namespace chdzdt::eval
