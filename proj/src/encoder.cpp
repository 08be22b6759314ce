#include "chdzdt/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <optional>
#include <set>
#include <sstream>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt {

using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys = {"n_blocks", "n_heads",  "hidden",   "ffn_mult",
                                           "max_chars", "vocab_size", "n_labels", "dropout",
                                           "seed",     "init_std", "init_scheme", "ln_eps"};

// Suspends recording on the active tape (inference inside a training step).
template <typename T>
class NoRecord {
 public:
  NoRecord() : previous_(ad::Tape<T>::active()) { ad::Tape<T>::set_active(nullptr); }
  ~NoRecord() { ad::Tape<T>::set_active(previous_); }

 private:
  ad::Tape<T>* previous_;
};

}  // namespace

// --- config -----------------------------------------------------------------

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (n_blocks < 1 || n_heads < 1 || hidden < 1 || ffn_mult < 1 || max_chars < 1 ||
      vocab_size < 1 || n_labels < 1) {
    fail("all counts must be >= 1");
  }
  if (hidden % n_heads != 0) fail("hidden size must be divisible by the head count");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(init_std > 0.0)) fail("init_std must be positive");
  if (!(ln_eps > 0.0)) fail("ln_eps must be positive");
  if (init_scheme != "normal" && init_scheme != "fan_in") {
    fail("init_scheme must be 'normal' or 'fan_in'");
  }
}

std::string ModelConfig::name() const {
  return std::to_string(n_blocks) + "x" + std::to_string(n_heads) + "x" + std::to_string(hidden);
}

json ModelConfig::to_json() const {
  return json{{"n_blocks", n_blocks},   {"n_heads", n_heads},     {"hidden", hidden},
              {"ffn_mult", ffn_mult},   {"max_chars", max_chars}, {"vocab_size", vocab_size},
              {"n_labels", n_labels},   {"dropout", dropout},     {"seed", seed},
              {"init_std", init_std},   {"init_scheme", init_scheme},
              {"ln_eps", ln_eps}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.count(key)) throw ConfigError("model config: unknown key '" + key + "'");
  }
  ModelConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("n_blocks", c.n_blocks);
    get("n_heads", c.n_heads);
    get("hidden", c.hidden);
    get("ffn_mult", c.ffn_mult);
    get("max_chars", c.max_chars);
    get("vocab_size", c.vocab_size);
    get("n_labels", c.n_labels);
    get("dropout", c.dropout);
    get("seed", c.seed);
    get("init_std", c.init_std);
    get("init_scheme", c.init_scheme);
    get("ln_eps", c.ln_eps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

std::size_t count_params(const ModelConfig& c) {
  const std::size_t d = c.hidden, f = c.ffn_mult * c.hidden, v = c.vocab_size, l = c.n_labels;
  const std::size_t embeddings = v * d + c.seq_len() * d + 2 * d;
  const std::size_t attention = 4 * (d * d + d) + 2 * d;
  const std::size_t ffn = d * f + f + f * d + d + 2 * d;
  const std::size_t heads = d * v + v + d * l + l;
  return embeddings + c.n_blocks * (attention + ffn) + heads;
}

// --- batch ------------------------------------------------------------------

Batch Batch::from_words(std::span<const TokenizedWord> words) {
  Batch b;
  b.size = words.size();
  if (words.empty()) return b;
  b.seq_len = words.front().ids.size();
  b.ids.reserve(b.size * b.seq_len);
  b.attention.reserve(b.size * b.seq_len);
  for (const auto& w : words) {
    if (w.ids.size() != b.seq_len || w.attention.size() != b.seq_len) {
      throw ContractError("batch: words have different sequence lengths");
    }
    b.ids.insert(b.ids.end(), w.ids.begin(), w.ids.end());
    b.attention.insert(b.attention.end(), w.attention.begin(), w.attention.end());
  }
  return b;
}

// --- encoder ----------------------------------------------------------------

template <typename T>
Encoder<T>::Encoder(ModelConfig config, std::shared_ptr<const CharVocab> vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (!vocab_) throw ConfigError("encoder: vocabulary is required");
  if (vocab_->size() != config_.vocab_size) {
    throw ConfigError("encoder: config vocab_size " + std::to_string(config_.vocab_size) +
                      " does not match vocabulary size " + std::to_string(vocab_->size()));
  }
  const std::size_t d = config_.hidden, f = config_.ffn_mult * d, v = config_.vocab_size;
  const std::size_t s = config_.seq_len(), l = config_.n_labels;
  Rng rng(config_.seed);

  // Matrices with a fan-in (first dimension of a [in, out] weight) use
  // 1/sqrt(fan_in) under the fan-in scheme; embedding tables use unit scale.
  const bool fan_in = config_.init_scheme == "fan_in";
  auto weight = [&](const std::string& name, ad::Shape shape, bool embedding = false) {
    const double std = !fan_in ? config_.init_std
                       : embedding ? 1.0
                                   : 1.0 / std::sqrt(static_cast<double>(shape[0]));
    std::vector<T> data(ad::numel(shape));
    for (auto& x : data) x = static_cast<T>(normal(rng, 0.0, std));
    params_.emplace_back(name, Tensor(std::move(shape), std::move(data), true));
  };
  auto constant = [&](const std::string& name, std::size_t n, T value) {
    params_.emplace_back(name, Tensor::full({n}, value, true));
  };
  auto norm = [&](const std::string& prefix) {
    constant(prefix + ".gain", d, T(1));
    constant(prefix + ".bias", d, T(0));
  };

  weight("char_embedding", {v, d}, true);
  weight("position_embedding", {s, d}, true);
  norm("embedding_ln");
  for (std::size_t i = 0; i < config_.n_blocks; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    for (const char* m : {"q", "k", "v", "o"}) {
      weight(p + "attn.w" + m, {d, d});
      constant(p + "attn.b" + m, d, T(0));
    }
    norm(p + "attn_ln");
    weight(p + "ffn.w1", {d, f});
    constant(p + "ffn.b1", f, T(0));
    weight(p + "ffn.w2", {f, d});
    constant(p + "ffn.b2", d, T(0));
    norm(p + "ffn_ln");
  }
  weight("mlm.weight", {d, v});
  constant("mlm.bias", v, T(0));
  weight("label.weight", {d, l});
  constant("label.bias", l, T(0));
}

template <typename T>
std::vector<ad::Tensor<T>> Encoder<T>::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [_, t] : params_) out.push_back(t);
  return out;
}

template <typename T>
ad::Tensor<T>& Encoder<T>::param(const std::string& name) {
  for (auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw IndexError("encoder: no parameter named '" + name + "'");
}

template <typename T>
const ad::Tensor<T>& Encoder<T>::param(const std::string& name) const {
  return const_cast<Encoder*>(this)->param(name);
}

template <typename T>
void Encoder<T>::set_requires_grad(bool on) {
  for (auto& [_, t] : params_) t.set_requires_grad(on);
}

template <typename T>
EncoderOutput<T> Encoder<T>::forward(const Batch& batch, bool train, Rng* rng,
                                     bool keep_attention) const {
  const std::size_t s = config_.seq_len(), n = batch.size;
  if (n == 0) throw ContractError("forward: empty batch");
  if (batch.seq_len != s || batch.ids.size() != n * s || batch.attention.size() != n * s) {
    throw ContractError("forward: sequence length " + std::to_string(batch.seq_len) +
                        " does not match the model's " + std::to_string(s));
  }
  const bool drop = train && config_.dropout > 0.0;
  if (drop && rng == nullptr) throw ContractError("forward: training mode needs an rng");
  auto dropout = [&](const Tensor& x) { return drop ? ad::dropout(x, config_.dropout, *rng) : x; };

  std::vector<std::int32_t> pos(n * s);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::int32_t>(i % s);

  // Parameters are visited in construction order.
  auto it = params_.begin();
  auto next = [&]() -> const Tensor& { return (it++)->second; };
  auto linear = [](const Tensor& x, const Tensor& w, const Tensor& b) {
    return ad::add_row(ad::matmul(x, w), b);
  };

  EncoderOutput<T> out;
  out.batch = n;
  const Tensor& char_table = next();
  const Tensor& pos_table = next();
  Tensor x = ad::add(ad::embedding(char_table, batch.ids), ad::embedding(pos_table, pos));
  {
    const Tensor& g = next();
    const Tensor& b = next();
    x = dropout(ad::layer_norm(x, g, b, config_.ln_eps));
  }
  for (std::size_t blk = 0; blk < config_.n_blocks; ++blk) {
    const Tensor &wq = next(), &bq = next(), &wk = next(), &bk = next();
    const Tensor &wv = next(), &bv = next(), &wo = next(), &bo = next();
    const Tensor &g1 = next(), &b1n = next();
    const Tensor &w1 = next(), &b1 = next(), &w2 = next(), &b2 = next();
    const Tensor &g2 = next(), &b2n = next();

    std::vector<T> probs;
    Tensor a = ad::masked_attention(linear(x, wq, bq), linear(x, wk, bk), linear(x, wv, bv),
                                    batch.attention, n, s, config_.n_heads,
                                    keep_attention ? &probs : nullptr);
    if (keep_attention) out.attention.push_back(std::move(probs));
    x = ad::layer_norm(ad::add(x, dropout(linear(a, wo, bo))), g1, b1n, config_.ln_eps);
    Tensor h = linear(ad::gelu(linear(x, w1, b1)), w2, b2);
    x = ad::layer_norm(ad::add(x, dropout(h)), g2, b2n, config_.ln_eps);
  }
  out.hidden = x;

  std::vector<std::size_t> cls_rows(n);
  for (std::size_t b = 0; b < n; ++b) cls_rows[b] = b * s;
  out.cls = ad::gather_rows(x, cls_rows);
  out.label_probs = ad::sigmoid(linear(out.cls, param("label.weight"), param("label.bias")));
  return out;
}

template <typename T>
EncoderOutput<T> Encoder<T>::forward(const TokenizedWord& word, bool train, Rng* rng) const {
  return forward(Batch::from_words(std::span<const TokenizedWord>(&word, 1)), train, rng);
}

template <typename T>
ad::Tensor<T> Encoder<T>::mlm_logits(const EncoderOutput<T>& out,
                                     std::span<const std::size_t> rows) const {
  const std::size_t s = config_.seq_len();
  for (std::size_t r : rows) {
    if (r >= out.batch * s) throw IndexError("mlm: row " + std::to_string(r) + " out of range");
  }
  Tensor h = ad::gather_rows(out.hidden, rows);
  return ad::add_row(ad::matmul(h, param("mlm.weight")), param("mlm.bias"));
}

template <typename T>
ad::Tensor<T> Encoder<T>::loss_mlm(const EncoderOutput<T>& out, std::span<const std::size_t> rows,
                                   std::span<const std::int32_t> original_ids) const {
  if (rows.empty()) throw ContractError("loss_mlm: no masked positions");
  if (rows.size() != original_ids.size()) {
    throw ContractError("loss_mlm: positions and targets differ in length");
  }
  for (std::size_t r : rows) {
    if (r % config_.seq_len() == 0) throw ContractError("loss_mlm: CLS position cannot be masked");
  }
  return ad::softmax_ce(mlm_logits(out, rows), original_ids, ad::Reduction::kMean);
}

template <typename T>
ad::Tensor<T> Encoder<T>::loss_multilabel(const EncoderOutput<T>& out,
                                          std::span<const T> targets) const {
  if (targets.size() != out.batch * config_.n_labels) {
    throw ContractError("loss_multilabel: expected " +
                        std::to_string(out.batch * config_.n_labels) + " targets, got " +
                        std::to_string(targets.size()));
  }
  return ad::bce_multilabel(out.label_probs, targets, 1e-7, ad::Reduction::kMean);
}

template <typename T>
std::vector<T> Encoder<T>::word_embedding(std::string_view word) const {
  NoRecord<T> guard;
  auto out = forward(vocab_->encode_word(word, config_.max_chars));
  auto c = out.cls.data();
  return {c.begin(), c.end()};
}

template <typename T>
std::vector<T> Encoder<T>::embed_words(const std::vector<std::string>& words,
                                       std::size_t chunk) const {
  NoRecord<T> guard;
  if (chunk == 0) chunk = 1;
  const std::size_t d = config_.hidden;
  std::vector<T> result(words.size() * d);
  std::vector<TokenizedWord> toks;
  for (std::size_t start = 0; start < words.size(); start += chunk) {
    const std::size_t end = std::min(words.size(), start + chunk);
    toks.clear();
    for (std::size_t i = start; i < end; ++i) {
      toks.push_back(vocab_->encode_word(words[i], config_.max_chars));
    }
    auto out = forward(Batch::from_words(toks));
    std::copy(out.cls.data().begin(), out.cls.data().end(), result.begin() + start * d);
  }
  return result;
}

template <typename T>
template <typename U>
Encoder<U> Encoder<T>::cast() const {
  Encoder<U> other(config_, vocab_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto src = params_[i].second.data();
    auto dst = other.params_[i].second.data();
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
  }
  return other;
}

template class Encoder<float>;
template class Encoder<double>;
template Encoder<double> Encoder<float>::cast<double>() const;
template Encoder<float> Encoder<double>::cast<float>() const;
template Encoder<float> Encoder<float>::cast<float>() const;

// --- checkpoints --------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'H', 'D', 'Z'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const Encoder<float>& model, const std::filesystem::path& path,
                     const json& meta) {
  json manifest = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : model.named_parameters()) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size() * sizeof(float);
  }
  const json header = {{"config", model.config().to_json()},
                       {"vocab", model.vocab().spec().to_json()},
                       {"tensors", manifest},
                       {"blob_bytes", offset},
                       {"meta", meta}};
  const std::string header_text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& [_, t] : model.named_parameters()) {
    for (float x : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(x));
  }
  io::write_file_atomic(path, out);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string where = "checkpoint " + path.string() + ": ";
  auto corrupt = [&](const std::string& m) { throw CorruptCheckpointError(where + m); };

  if (bytes.size() < 16) corrupt("file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic");
  const auto version = get_le(bytes, 4, 4);
  if (version != kCheckpointVersion) corrupt("unsupported format version " + std::to_string(version));
  const auto header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) corrupt("header extends past end of file");

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header_len));
  } catch (const json::exception& e) {
    corrupt(std::string("unreadable header: ") + e.what());
  }

  std::optional<Encoder<float>> model;
  json meta;
  std::vector<std::size_t> offsets;
  try {
    const auto config = ModelConfig::from_json(header.at("config"));
    auto vocab = std::make_shared<const CharVocab>(
        CharVocab::build(VocabSpec::from_json(header.at("vocab"))));
    model.emplace(config, std::move(vocab));
    meta = header.value("meta", json::object());

    const auto& manifest = header.at("tensors");
    const auto& params = model->named_parameters();
    if (!manifest.is_array() || manifest.size() != params.size()) corrupt("tensor manifest does not match the config");
    std::size_t expected = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = manifest[i];
      if (entry.at("name").get<std::string>() != params[i].first ||
          entry.at("shape").get<ad::Shape>() != params[i].second.shape() ||
          entry.at("offset").get<std::size_t>() != expected) {
        corrupt("manifest entry " + std::to_string(i) + " does not match the config");
      }
      offsets.push_back(expected);
      expected += params[i].second.size() * sizeof(float);
    }
    if (header.at("blob_bytes").get<std::size_t>() != expected) corrupt("blob length mismatch");
    if (bytes.size() - 16 - header_len != expected) {
      corrupt("expected " + std::to_string(expected) + " tensor bytes, found " +
              std::to_string(bytes.size() - 16 - header_len));
    }
  } catch (const json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    corrupt(std::string("invalid configuration: ") + e.what());
  }

  const std::size_t base = 16 + header_len;
  auto& params = model->named_parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = const_cast<ad::Tensor<float>&>(params[i].second).data();
    for (std::size_t j = 0; j < dst.size(); ++j) {
      dst[j] = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_le(bytes, base + offsets[i] + 4 * j, 4)));
    }
  }
  return LoadedCheckpoint{std::move(*model), std::move(meta)};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto loaded = load_checkpoint(path);
  auto a = loaded.model.config();
  auto b = expected;
  a.dropout = b.dropout = 0;
  a.seed = b.seed = 0;
  a.init_std = b.init_std = 1;
  a.init_scheme = b.init_scheme = "";
  if (!(a == b)) {
    throw ConfigMismatchError("checkpoint " + path.string() + " holds a " +
                              loaded.model.config().name() + " model (vocab " +
                              std::to_string(a.vocab_size) + "), expected " + expected.name() +
                              " (vocab " + std::to_string(b.vocab_size) + ")");
  }
  return loaded;
}

}  // namespace chdzdt
