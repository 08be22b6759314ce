#include "chdzdt/eval/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "chdzdt/adam.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/random.hpp"
#include "chdzdt/tensor.hpp"

namespace chdzdt::eval {

namespace {

using F = float;
using ad::Tensor;

// Word vectors for decoder batches. Frozen vectors are cached constants;
// finetune vectors are CLS states of a private encoder copy and carry
// gradients while a tape is active.
class Features {
 public:
  Features(const WordSource& source, TrainMode mode) {
    if (mode == TrainMode::kFinetune) {
      if (!source.encoder) {
        throw ContractError("finetune mode needs a chDzDT checkpoint; external vectors are frozen");
      }
      tuned_ = std::make_shared<Encoder<float>>(source.encoder->cast<float>());
      tuned_->set_requires_grad(true);
      dim_ = tuned_->config().hidden;
      return;
    }
    embedder_ = source.embedder;
    if (!embedder_) {
      if (!source.encoder) throw ContractError("no embedder or encoder given");
      owned_ = std::make_unique<EncoderEmbedder>(source.encoder);
      embedder_ = owned_.get();
    }
    dim_ = embedder_->dim();
  }

  std::size_t dim() const { return dim_; }

  Tensor<F> lookup(const std::vector<std::string>& words) {
    if (tuned_) {
      std::vector<TokenizedWord> toks;
      toks.reserve(words.size());
      for (const auto& w : words) toks.push_back(tuned_->vocab().encode_word(w, tuned_->config().max_chars));
      return tuned_->forward(Batch::from_words(toks)).cls;
    }
    std::vector<std::string> missing;
    for (const auto& w : words) {
      if (!cache_.count(w)) {
        cache_[w];
        missing.push_back(w);
      }
    }
    if (!missing.empty()) {
      const auto m = embedder_->embed_all(missing);
      for (std::size_t i = 0; i < missing.size(); ++i) {
        cache_[missing[i]].assign(m.row(i).begin(), m.row(i).end());
      }
    }
    std::vector<F> flat;
    flat.reserve(words.size() * dim_);
    for (const auto& w : words) {
      const auto& v = cache_.at(w);
      flat.insert(flat.end(), v.begin(), v.end());
    }
    return Tensor<F>({words.size(), dim_}, std::move(flat));
  }

  std::vector<Tensor<F>> trainable() const {
    return tuned_ ? tuned_->parameters() : std::vector<Tensor<F>>{};
  }

  std::shared_ptr<Encoder<float>> finish() {
    if (tuned_) tuned_->set_requires_grad(false);
    return tuned_;
  }

 private:
  const Embedder* embedder_ = nullptr;
  std::unique_ptr<EncoderEmbedder> owned_;
  std::shared_ptr<Encoder<float>> tuned_;
  std::unordered_map<std::string, std::vector<F>> cache_;
  std::size_t dim_ = 0;
};

struct Linear {
  Tensor<F> w, b;
  Tensor<F> operator()(const Tensor<F>& x) const { return ad::add_row(ad::matmul(x, w), b); }
};

Linear make_linear(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<F> w(in * out);
  for (auto& x : w) x = static_cast<F>(uniform(rng, -bound, bound));
  return {Tensor<F>({in, out}, std::move(w), true), Tensor<F>::zeros({out}, true)};
}

struct BiGru {
  ad::GruParams<F> fwd, bwd;

  struct Output {
    std::vector<Tensor<F>> steps;  // [B, 2H] per position
    Tensor<F> final;               // [B, 2H]: forward after the last real token, backward after the first
  };

  // xs[t] is [B, d]; lengths[b] real positions per row. Padded positions leave
  // the state untouched.
  Output run(const std::vector<Tensor<F>>& xs, const std::vector<std::size_t>& lengths) const {
    const std::size_t B = lengths.size(), H = fwd.hidden_size(), L = xs.size();
    std::vector<Tensor<F>> masks(L);
    for (std::size_t t = 0; t < L; ++t) {
      std::vector<F> m(B * H);
      for (std::size_t b = 0; b < B; ++b) {
        std::fill_n(m.begin() + b * H, H, t < lengths[b] ? F(1) : F(0));
      }
      masks[t] = Tensor<F>({B, H}, std::move(m));
    }
    auto step = [&](const ad::GruParams<F>& p, const Tensor<F>& x, const Tensor<F>& h, const Tensor<F>& m) {
      return ad::add(h, ad::mul(m, ad::sub(ad::gru_cell(x, h, p), h)));
    };
    std::vector<Tensor<F>> f(L), bk(L);
    auto h = Tensor<F>::zeros({B, H});
    for (std::size_t t = 0; t < L; ++t) f[t] = h = step(fwd, xs[t], h, masks[t]);
    auto g = Tensor<F>::zeros({B, H});
    for (std::size_t t = L; t-- > 0;) bk[t] = g = step(bwd, xs[t], g, masks[t]);
    Output out;
    for (std::size_t t = 0; t < L; ++t) out.steps.push_back(ad::concat_cols<F>({f[t], bk[t]}));
    out.final = ad::concat_cols<F>({h, g});
    return out;
  }

  std::vector<Tensor<F>> parameters() const {
    return {fwd.w_input, fwd.b_input, fwd.w_hidden, fwd.b_hidden,
            bwd.w_input, bwd.b_input, bwd.w_hidden, bwd.b_hidden};
  }
};

// Unique words of a batch of sequences, and per position an index into them
// (U for padding, pointing at an appended zero row).
struct SequenceBatch {
  std::vector<std::string> vocab;
  std::vector<std::vector<std::size_t>> index;  // [t][b]
  std::vector<std::size_t> lengths;
};

SequenceBatch make_sequence_batch(const std::vector<const std::vector<std::string>*>& seqs) {
  SequenceBatch sb;
  std::unordered_map<std::string, std::size_t> pos;
  std::size_t L = 0;
  for (const auto* s : seqs) {
    sb.lengths.push_back(s->size());
    L = std::max(L, s->size());
    for (const auto& w : *s) {
      if (pos.emplace(w, sb.vocab.size()).second) sb.vocab.push_back(w);
    }
  }
  const std::size_t pad = sb.vocab.size();
  sb.index.assign(L, std::vector<std::size_t>(seqs.size(), pad));
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    for (std::size_t t = 0; t < seqs[b]->size(); ++t) sb.index[t][b] = pos.at((*seqs[b])[t]);
  }
  return sb;
}

std::vector<Tensor<F>> embed_steps(Features& features, const SequenceBatch& sb) {
  const auto vecs = features.lookup(sb.vocab);
  const auto table = ad::concat_rows<F>({vecs, Tensor<F>::zeros({1, features.dim()})});
  std::vector<Tensor<F>> xs;
  for (const auto& idx : sb.index) xs.push_back(ad::gather_rows(table, idx));
  return xs;
}

std::vector<std::size_t> argmax_rows(const Tensor<F>& logits) {
  std::vector<std::size_t> out(logits.rows());
  const std::size_t c = logits.cols();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto row = logits.data().subspan(r * c, c);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// Minibatch Adam until the epoch's mean loss drops below the stop threshold.
TrainingTrace fit(const DecoderConfig& cfg, std::size_t n, const std::vector<Tensor<F>>& params, Rng& rng,
                  const std::function<Tensor<F>(std::span<const std::size_t>)>& batch_loss) {
  if (n == 0) throw InputError("no training examples");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  Adam<F> opt(params, AdamConfig{cfg.lr});
  TrainingTrace trace;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      ad::Tape<F> tape;
      ad::TapeScope<F> scope(tape);
      const auto loss = batch_loss(idx);
      if (!std::isfinite(loss.item())) {
        throw NumericalError("decoder loss is not finite at epoch " + std::to_string(epoch + 1));
      }
      tape.backward(loss);
      opt.step();
      total += static_cast<double>(loss.item()) * static_cast<double>(idx.size());
    }
    trace.epoch_loss.push_back(total / static_cast<double>(n));
    if (trace.epoch_loss.back() < cfg.stop_error) {
      trace.early_stopped = true;
      break;
    }
  }
  return trace;
}

std::vector<ClassScore> class_scores(const std::vector<std::string>& names,
                                     const std::vector<std::size_t>& gold,
                                     const std::vector<std::size_t>& pred) {
  std::vector<std::size_t> tp(names.size(), 0), fp(names.size(), 0), fn(names.size(), 0), sup(names.size(), 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool known = gold[i] < names.size();
    if (known) ++sup[gold[i]];
    if (known && gold[i] == pred[i]) {
      ++tp[pred[i]];
    } else {
      ++fp[pred[i]];
      if (known) ++fn[gold[i]];
    }
  }
  std::vector<ClassScore> out;
  for (std::size_t c = 0; c < names.size(); ++c) out.push_back({names[c], sup[c], prf_from_counts(tp[c], fp[c], fn[c])});
  return out;
}

template <typename M>
std::size_t index_of(const M& m, const std::string& key, std::size_t missing) {
  auto it = m.find(key);
  return it == m.end() ? missing : it->second;
}

}  // namespace

std::string_view to_string(TrainMode mode) { return mode == TrainMode::kFrozen ? "frozen" : "finetune"; }

TrainMode parse_train_mode(std::string_view name) {
  if (name == "frozen") return TrainMode::kFrozen;
  if (name == "finetune") return TrainMode::kFinetune;
  throw InputError("unknown mode '" + std::string(name) + "' (frozen, finetune)");
}

DecoderConfig DecoderConfig::morph() {
  DecoderConfig c;
  c.max_epochs = 100;
  return c;
}

DecoderConfig DecoderConfig::pos() { return DecoderConfig{}; }

DecoderConfig DecoderConfig::sentiment() {
  DecoderConfig c;
  c.max_epochs = 100;
  c.max_words = 30;
  return c;
}

Split holdout(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("split fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  Split s{{order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)},
          {order.begin() + static_cast<std::ptrdiff_t>(k), order.end()}};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

MorphReport morph_tagger(const WordSource& source, const std::vector<MorphRow>& train,
                         const std::vector<MorphRow>& test, TrainMode mode, const DecoderConfig& config) {
  if (train.empty() || test.empty()) throw InputError("morph tagger needs training and test rows");
  MorphReport report;
  report.n_train = train.size();
  report.n_test = test.size();

  // Tagsets from training rows; a feature missing from a row is "NA".
  std::map<std::string, std::set<std::string>> values;
  for (const auto& r : train) {
    for (const auto& [f, v] : r.features) values[f].insert(v);
  }
  if (values.empty()) throw InputError("morph tagger: training rows carry no features");
  for (const auto& r : train) {
    for (auto& [f, vs] : values) {
      if (!r.features.count(f)) vs.insert("NA");
    }
  }
  struct Head {
    std::string feature;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> ids;
    bool binary = false;
    Linear layer;
  };
  Rng rng(config.seed);
  Features features(source, mode);
  const Linear shared = make_linear(features.dim(), config.dense, rng);
  std::vector<Head> heads;
  for (const auto& [f, vs] : values) {
    Head h{f, {vs.begin(), vs.end()}, {}, vs.size() == 2, {}};
    for (std::size_t i = 0; i < h.names.size(); ++i) h.ids[h.names[i]] = i;
    h.layer = make_linear(config.dense, h.binary ? 1 : h.names.size(), rng);
    heads.push_back(std::move(h));
  }
  auto value_of = [](const MorphRow& r, const std::string& f) {
    auto it = r.features.find(f);
    return it == r.features.end() ? std::string("NA") : it->second;
  };

  std::vector<Tensor<F>> params = features.trainable();
  params.push_back(shared.w);
  params.push_back(shared.b);
  for (const auto& h : heads) {
    params.push_back(h.layer.w);
    params.push_back(h.layer.b);
  }

  auto hidden_of = [&](const std::vector<MorphRow>& rows, std::span<const std::size_t> idx) {
    std::vector<std::string> words;
    for (std::size_t i : idx) words.push_back(rows[i].word);
    return ad::relu(shared(features.lookup(words)));
  };

  report.trace = fit(config, train.size(), params, rng, [&](std::span<const std::size_t> idx) {
    const auto hidden = hidden_of(train, idx);
    Tensor<F> total;
    for (const auto& h : heads) {
      const auto logits = h.layer(hidden);
      Tensor<F> loss;
      if (h.binary) {
        std::vector<F> y;
        for (std::size_t i : idx) y.push_back(static_cast<F>(h.ids.at(value_of(train[i], h.feature))));
        loss = ad::bce_multilabel<F>(ad::sigmoid(logits), y);
      } else {
        std::vector<std::int32_t> y;
        for (std::size_t i : idx) y.push_back(static_cast<std::int32_t>(h.ids.at(value_of(train[i], h.feature))));
        loss = ad::softmax_ce(logits, y);
      }
      total = total.defined() ? ad::add(total, loss) : loss;
    }
    return total;
  });

  std::vector<std::size_t> all(test.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> correct(heads.size(), 0);
  std::size_t unknown = 0;
  for (std::size_t start = 0; start < all.size(); start += config.batch_size) {
    std::span<const std::size_t> idx(all.data() + start, std::min(all.size() - start, config.batch_size));
    const auto hidden = hidden_of(test, idx);
    for (std::size_t hi = 0; hi < heads.size(); ++hi) {
      const auto& h = heads[hi];
      const auto logits = h.layer(hidden);
      const auto best = h.binary ? std::vector<std::size_t>{} : argmax_rows(logits);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t gold = index_of(h.ids, value_of(test[idx[r]], h.feature), h.names.size());
        if (gold == h.names.size()) {
          ++unknown;
          continue;
        }
        const std::size_t pred = h.binary ? (logits.at(r, 0) >= 0 ? 1 : 0) : best[r];
        correct[hi] += pred == gold;
      }
    }
  }
  if (unknown) {
    report.warnings.push_back(std::to_string(unknown) +
                              " test feature values were not seen in training; counted as errors");
  }
  double sum = 0;
  for (std::size_t hi = 0; hi < heads.size(); ++hi) {
    std::map<std::string, std::size_t> freq;
    for (const auto& r : test) ++freq[value_of(r, heads[hi].feature)];
    std::size_t top = 0;
    for (const auto& [v, c] : freq) top = std::max(top, c);
    FeatureAccuracy fa{heads[hi].feature, heads[hi].names.size(), heads[hi].binary,
                       static_cast<double>(correct[hi]) / static_cast<double>(test.size()),
                       static_cast<double>(top) / static_cast<double>(test.size())};
    sum += fa.accuracy;
    report.features.push_back(fa);
  }
  report.overall = sum / static_cast<double>(heads.size());
  report.tuned = features.finish();
  return report;
}

PosReport pos_tagger(const WordSource& source, const std::vector<TaggedSentence>& train,
                     const std::vector<TaggedSentence>& test, TrainMode mode, const DecoderConfig& config) {
  PosReport report;
  if (config.max_words == 0) throw ConfigError("max_words must be positive");
  struct Sent {
    std::vector<std::string> words;
    std::vector<std::string> tags;
  };
  std::size_t skipped = 0;
  auto prepare = [&](const std::vector<TaggedSentence>& in) {
    std::vector<Sent> out;
    for (const auto& s : in) {
      if (s.tokens.empty()) {
        ++skipped;
        continue;
      }
      Sent t;
      for (std::size_t i = 0; i < std::min(s.tokens.size(), config.max_words); ++i) {
        t.words.push_back(s.tokens[i].first);
        t.tags.push_back(s.tokens[i].second);
      }
      out.push_back(std::move(t));
    }
    return out;
  };
  const auto tr = prepare(train), te = prepare(test);
  if (skipped) report.warnings.push_back(std::to_string(skipped) + " empty sentences skipped");
  if (tr.empty() || te.empty()) throw InputError("pos tagger needs non-empty training and test sentences");

  std::set<std::string> tagset;
  for (const auto& s : tr) tagset.insert(s.tags.begin(), s.tags.end());
  const std::vector<std::string> tags(tagset.begin(), tagset.end());
  std::map<std::string, std::size_t> tag_id;
  for (std::size_t i = 0; i < tags.size(); ++i) tag_id[tags[i]] = i;
  for (const auto& s : tr) report.n_train_tokens += s.words.size();
  for (const auto& s : te) report.n_test_tokens += s.words.size();

  Rng rng(config.seed);
  Features features(source, mode);
  const BiGru gru{ad::make_gru_params<F>(features.dim(), config.gru_hidden, rng),
                  ad::make_gru_params<F>(features.dim(), config.gru_hidden, rng)};
  const Linear dense = make_linear(2 * config.gru_hidden, config.dense, rng);
  const Linear out_layer = make_linear(config.dense, tags.size(), rng);
  std::vector<Tensor<F>> params = features.trainable();
  for (const auto& p : gru.parameters()) params.push_back(p);
  for (const auto* l : {&dense, &out_layer}) {
    params.push_back(l->w);
    params.push_back(l->b);
  }

  // Logits for the real (unpadded) tokens, ordered by sentence then position.
  auto logits_of = [&](const std::vector<Sent>& data, std::span<const std::size_t> idx) {
    std::vector<const std::vector<std::string>*> seqs;
    for (std::size_t i : idx) seqs.push_back(&data[i].words);
    const auto sb = make_sequence_batch(seqs);
    const auto states = gru.run(embed_steps(features, sb), sb.lengths);
    const auto flat = ad::concat_rows(states.steps);  // row t*B + b
    std::vector<std::size_t> rows;
    const std::size_t B = idx.size();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < sb.lengths[b]; ++t) rows.push_back(t * B + b);
    }
    return out_layer(ad::relu(dense(ad::gather_rows(flat, rows))));
  };

  report.trace = fit(config, tr.size(), params, rng, [&](std::span<const std::size_t> idx) {
    std::vector<std::int32_t> y;
    for (std::size_t i : idx) {
      for (const auto& t : tr[i].tags) y.push_back(static_cast<std::int32_t>(tag_id.at(t)));
    }
    return ad::softmax_ce(logits_of(tr, idx), y);
  });

  std::vector<std::size_t> gold, pred;
  std::vector<std::size_t> all(te.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t start = 0; start < all.size(); start += config.batch_size) {
    std::span<const std::size_t> idx(all.data() + start, std::min(all.size() - start, config.batch_size));
    const auto p = argmax_rows(logits_of(te, idx));
    pred.insert(pred.end(), p.begin(), p.end());
    for (std::size_t i : idx) {
      for (const auto& t : te[i].tags) gold.push_back(index_of(tag_id, t, tags.size()));
    }
  }
  std::size_t correct = 0, unknown = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    correct += gold[i] == pred[i];
    unknown += gold[i] == tags.size();
  }
  if (unknown) {
    report.warnings.push_back(std::to_string(unknown) + " test tokens carry tags unseen in training; counted as errors");
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  report.tags = class_scores(tags, gold, pred);
  report.tuned = features.finish();
  return report;
}

SentimentReport sentiment_classifier(const WordSource& source, const std::vector<SentimentExample>& train,
                                     const std::vector<SentimentExample>& test, TrainMode mode,
                                     const DecoderConfig& config) {
  static const std::vector<std::string> labels = {"negative", "neutral", "positive"};
  SentimentReport report;
  if (config.max_words == 0) throw ConfigError("max_words must be positive");
  struct Text {
    std::vector<std::string> words;
    std::size_t label;
  };
  std::size_t skipped = 0;
  auto prepare = [&](const std::vector<SentimentExample>& in, std::map<std::string, std::size_t>& dist) {
    std::vector<Text> out;
    for (const auto& e : in) {
      auto it = std::find(labels.begin(), labels.end(), e.label);
      if (it == labels.end()) {
        throw InputError("sentiment label '" + e.label + "' is not positive, neutral or negative");
      }
      auto words = split_words(e.text);
      if (words.empty()) {
        ++skipped;
        continue;
      }
      if (words.size() > config.max_words) words.resize(config.max_words);
      ++dist[e.label];
      out.push_back({std::move(words), static_cast<std::size_t>(it - labels.begin())});
    }
    return out;
  };
  const auto tr = prepare(train, report.train_distribution);
  const auto te = prepare(test, report.test_distribution);
  for (const auto& t : tr) report.n_train_words += t.words.size();
  for (const auto& t : te) report.n_test_words += t.words.size();
  if (skipped) report.warnings.push_back(std::to_string(skipped) + " empty texts skipped");
  if (tr.empty() || te.empty()) throw InputError("sentiment classifier needs non-empty training and test texts");

  Rng rng(config.seed);
  Features features(source, mode);
  const BiGru gru{ad::make_gru_params<F>(features.dim(), config.gru_hidden, rng),
                  ad::make_gru_params<F>(features.dim(), config.gru_hidden, rng)};
  const Linear dense = make_linear(2 * config.gru_hidden, config.dense, rng);
  const Linear out_layer = make_linear(config.dense, labels.size(), rng);
  std::vector<Tensor<F>> params = features.trainable();
  for (const auto& p : gru.parameters()) params.push_back(p);
  for (const auto* l : {&dense, &out_layer}) {
    params.push_back(l->w);
    params.push_back(l->b);
  }

  auto logits_of = [&](const std::vector<Text>& data, std::span<const std::size_t> idx) {
    std::vector<const std::vector<std::string>*> seqs;
    for (std::size_t i : idx) seqs.push_back(&data[i].words);
    const auto sb = make_sequence_batch(seqs);
    const auto states = gru.run(embed_steps(features, sb), sb.lengths);
    return out_layer(ad::relu(dense(states.final)));
  };

  report.trace = fit(config, tr.size(), params, rng, [&](std::span<const std::size_t> idx) {
    std::vector<std::int32_t> y;
    for (std::size_t i : idx) y.push_back(static_cast<std::int32_t>(tr[i].label));
    return ad::softmax_ce(logits_of(tr, idx), y);
  });

  std::vector<std::size_t> gold, pred;
  std::vector<std::size_t> all(te.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t start = 0; start < all.size(); start += config.batch_size) {
    std::span<const std::size_t> idx(all.data() + start, std::min(all.size() - start, config.batch_size));
    const auto p = argmax_rows(logits_of(te, idx));
    pred.insert(pred.end(), p.begin(), p.end());
    for (std::size_t i : idx) gold.push_back(te[i].label);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  report.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  report.classes = class_scores(labels, gold, pred);
  report.tuned = features.finish();
  return report;
}

}  // namespace chdzdt::eval
