#pragma once

// The chDzDT encoder: character + learned positional embeddings, a stack of
// post-LN transformer blocks, a masked-character head over the vocabulary
// and a sigmoid language-label head on the CLS state.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chdzdt/chartok.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/tensor.hpp"

namespace chdzdt {

struct ModelConfig {
  std::size_t n_blocks = 2;
  std::size_t n_heads = 2;
  std::size_t hidden = 16;
  std::size_t ffn_mult = 4;
  std::size_t max_chars = 20;
  std::size_t vocab_size = 0;
  std::size_t n_labels = 5;
  double dropout = 0.1;
  std::uint64_t seed = 42;
  double init_std = 0.02;
  // "normal": every weight ~ N(0, init_std). "fan_in": weights ~ N(0, 1/fan_in),
  // embedding tables ~ N(0, 1).
  std::string init_scheme = "normal";
  double ln_eps = 1e-12;

  std::size_t seq_len() const { return 1 + max_chars; }
  // Throws ConfigError.
  void validate() const;
  std::string name() const;  // "NxHxd"

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Closed-form number of learnable scalars.
std::size_t count_params(const ModelConfig& config);

// A batch of tokenized words laid out row-major as [size, seq_len].
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> attention;

  static Batch from_words(std::span<const TokenizedWord> words);
};

template <typename T>
struct EncoderOutput {
  std::size_t batch = 0;
  ad::Tensor<T> hidden;       // [batch*seq_len, d]
  ad::Tensor<T> cls;          // [batch, d], hidden row 0 of each word
  ad::Tensor<T> label_probs;  // [batch, n_labels]
  // Per block, attention weights [batch][head][query][key] (when requested).
  std::vector<std::vector<T>> attention;
};

template <typename T>
class Encoder {
 public:
  using Tensor = ad::Tensor<T>;

  // Random initialization from config.seed (see ModelConfig::init_scheme);
  // biases zero, layer-norm gains one.
  Encoder(ModelConfig config, std::shared_ptr<const CharVocab> vocab);

  const ModelConfig& config() const { return config_; }
  const CharVocab& vocab() const { return *vocab_; }
  std::shared_ptr<const CharVocab> vocab_ptr() const { return vocab_; }

  // Ordered (name, tensor) list; tensors share storage with the model.
  const std::vector<std::pair<std::string, Tensor>>& named_parameters() const { return params_; }
  std::vector<Tensor> parameters() const;
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  void set_requires_grad(bool on);

  // `rng` drives dropout and is only consulted when `train` is true.
  EncoderOutput<T> forward(const Batch& batch, bool train = false, Rng* rng = nullptr,
                           bool keep_attention = false) const;
  EncoderOutput<T> forward(const TokenizedWord& word, bool train = false, Rng* rng = nullptr) const;

  // Masked-character logits for the given flat hidden rows (b*seq_len + pos).
  Tensor mlm_logits(const EncoderOutput<T>& out, std::span<const std::size_t> rows) const;

  // Mean cross-entropy over the listed positions. Throws ContractError when
  // `rows` is empty.
  Tensor loss_mlm(const EncoderOutput<T>& out, std::span<const std::size_t> rows,
                  std::span<const std::int32_t> original_ids) const;
  // Per word: sum over labels of binary cross-entropy; mean over the batch.
  Tensor loss_multilabel(const EncoderOutput<T>& out, std::span<const T> targets) const;

  // CLS state of the word in eval mode.
  std::vector<T> word_embedding(std::string_view word) const;
  // Row-major [words.size(), d]; processed in chunks of `chunk` words.
  std::vector<T> embed_words(const std::vector<std::string>& words, std::size_t chunk = 256) const;

  // Parameters converted to another precision (same config and vocabulary).
  template <typename U>
  Encoder<U> cast() const;

 private:
  template <typename U>
  friend class Encoder;

  ModelConfig config_;
  std::shared_ptr<const CharVocab> vocab_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

template <typename T>
ad::Tensor<T> loss_total(const ad::Tensor<T>& mlm, const ad::Tensor<T>& multilabel) {
  return ad::add(mlm, multilabel);
}

// Checkpoint container: "CHDZ", u32 version, u64 header length, JSON header
// (config, vocab spec, tensor manifest, meta), then little-endian float32
// blobs in manifest order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Encoder<float>& model, const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  Encoder<float> model;
  nlohmann::json meta;
};

// Throws CorruptCheckpointError on any structural problem; nothing is
// returned unless every tensor was read.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
// As above, and throws ConfigMismatchError unless the architecture matches
// `expected` (dropout and seed are not compared).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace chdzdt
