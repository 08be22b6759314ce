#pragma once

// Joint masked-character + multi-label pre-training over a lexicon.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chdzdt/encoder.hpp"
#include "chdzdt/labels.hpp"
#include "chdzdt/preprocess.hpp"

namespace chdzdt {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double mask_ratio = 0.15;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  std::size_t log_every = 10;        // steps
  std::size_t checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  std::size_t warmup_steps = 0;      // linear warmup, then constant

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainExample {
  std::string word;
  TokenizedWord tokens;
  LabelSet labels = 0;
};

// Tokenizes every lexicon entry (words longer than max_chars are truncated).
std::vector<TrainExample> make_examples(const Lexicon& lexicon, const CharVocab& vocab,
                                        std::size_t max_chars);

struct MaskedBatch {
  Batch batch;                            // corrupted ids
  std::vector<std::size_t> mask_rows;     // flat rows b*seq_len + pos
  std::vector<std::int32_t> original_ids; // one per mask row
  std::vector<std::size_t> mask_offsets;  // example b owns [offsets[b], offsets[b+1])
  std::vector<float> targets;             // [size, kNumLangs]
  std::vector<std::string> words;
};

// Per example, ceil(ratio * chars) distinct character positions (at least one)
// are replaced by MASK.
MaskedBatch mask_batch(std::span<const TrainExample> examples, double ratio, Rng& rng);
std::size_t mask_count(std::size_t chars, double ratio);

struct StepRecord {
  std::size_t segment = 0;
  std::size_t step = 0;  // 1-based within the segment
  std::size_t epoch = 0; // 1-based within the segment
  double mlm = 0;
  double multilabel = 0;
  double total = 0;
  double lr = 0;
  double samples_per_sec = 0;
};

struct EpochRecord {
  std::size_t segment = 0;
  std::size_t epoch = 0;
  double mlm = 0;  // means over the epoch's steps
  double multilabel = 0;
  double total = 0;
  double seconds = 0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  // One JSON object per line: every log_every-th step plus each epoch's
  // summary. Timing fields are omitted when `timing` is false, which makes
  // the text identical across runs with the same seed.
  std::string to_jsonl(std::size_t log_every = 1, bool timing = true) const;
};

struct TrainHooks {
  // Periodic checkpoints go to <dir>/epoch_<n>.chdz when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  // Human-readable progress lines.
  std::ostream* progress = nullptr;
};

struct TrainResult {
  Encoder<float> model;
  TrainLog log;
  std::size_t segment = 0;
  double seconds = 0;

  // Metadata stored alongside checkpoints of this run.
  nlohmann::json meta(const TrainConfig& config) const;
};

// Fresh model from config (vocab_size must match `vocab`). Throws
// InputError for an empty lexicon and NumericalError on a non-finite loss,
// naming the step and the words of the offending batch.
TrainResult train(const Lexicon& lexicon, const ModelConfig& model_config,
                  std::shared_ptr<const CharVocab> vocab, const TrainConfig& config,
                  const TrainHooks& hooks = {});

// Continues from a checkpoint with fresh optimizer moments as a new log
// segment.
TrainResult resume(const LoadedCheckpoint& checkpoint, const Lexicon& lexicon,
                   const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace chdzdt
