#pragma once

// Task decoders trained on top of word vectors: a multi-head morphological
// tagger, a BiGRU PoS tagger and a BiGRU sentiment classifier. In finetune
// mode the encoder is copied and trained jointly with the decoder.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "chdzdt/encoder.hpp"
#include "chdzdt/eval/datasets.hpp"
#include "chdzdt/eval/embedder.hpp"
#include "chdzdt/eval/probe.hpp"

namespace chdzdt::eval {

enum class TrainMode { kFrozen, kFinetune };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

// Frozen mode reads `embedder` (or wraps `encoder` when no embedder is set);
// finetune mode needs `encoder`.
struct WordSource {
  const Embedder* embedder = nullptr;
  std::shared_ptr<const Encoder<float>> encoder;
};

struct DecoderConfig {
  std::size_t gru_hidden = 384;  // per direction; the two are concatenated
  std::size_t dense = 768;
  std::size_t max_epochs = 50;
  std::size_t max_words = 60;  // sentence truncation (ignored by the morph tagger)
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double stop_error = 0.1;  // early stop once the epoch's mean training loss is below
  std::uint64_t seed = 42;

  static DecoderConfig morph();      // 100 epochs
  static DecoderConfig pos();        // 50 epochs, 60 words
  static DecoderConfig sentiment();  // 100 epochs, 30 words
};

struct TrainingTrace {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  bool early_stopped = false;
};

struct ClassScore {
  std::string label;
  std::size_t support = 0;
  Prf prf;
};

struct FeatureAccuracy {
  std::string feature;
  std::size_t n_classes = 0;
  bool binary = false;
  double accuracy = 0;
  double majority_rate = 0;  // share of the most frequent test value
};

struct MorphReport {
  std::vector<FeatureAccuracy> features;
  double overall = 0;  // unweighted mean of per-feature accuracies
  std::size_t n_train = 0, n_test = 0;
  TrainingTrace trace;
  std::vector<std::string> warnings;
  std::shared_ptr<Encoder<float>> tuned;  // finetune mode only
};

struct PosReport {
  double accuracy = 0;
  std::vector<ClassScore> tags;
  std::size_t n_train_tokens = 0, n_test_tokens = 0;  // scored, after truncation
  TrainingTrace trace;
  std::vector<std::string> warnings;
  std::shared_ptr<Encoder<float>> tuned;
};

struct SentimentReport {
  double accuracy = 0;
  std::vector<ClassScore> classes;
  std::map<std::string, std::size_t> train_distribution, test_distribution;
  std::size_t n_train_words = 0, n_test_words = 0;  // after truncation
  TrainingTrace trace;
  std::vector<std::string> warnings;
  std::shared_ptr<Encoder<float>> tuned;
};

// Feature tagsets are collected from the training rows; test values never
// seen in training count as errors.
MorphReport morph_tagger(const WordSource& source, const std::vector<MorphRow>& train,
                         const std::vector<MorphRow>& test, TrainMode mode,
                         const DecoderConfig& config = DecoderConfig::morph());

PosReport pos_tagger(const WordSource& source, const std::vector<TaggedSentence>& train,
                     const std::vector<TaggedSentence>& test, TrainMode mode,
                     const DecoderConfig& config = DecoderConfig::pos());

SentimentReport sentiment_classifier(const WordSource& source,
                                     const std::vector<SentimentExample>& train,
                                     const std::vector<SentimentExample>& test, TrainMode mode,
                                     const DecoderConfig& config = DecoderConfig::sentiment());

// Seeded shuffle split of n items; `fraction` goes to the first part.
Split holdout(std::size_t n, double fraction, std::uint64_t seed);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

// Whitespace tokenization of sentiment texts.
std::vector<std::string> split_words(std::string_view text);

}  // namespace chdzdt::eval
