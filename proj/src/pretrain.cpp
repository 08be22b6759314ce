#include "chdzdt/pretrain.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "chdzdt/adam.hpp"
#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt {

using nlohmann::json;

namespace {

const std::set<std::string> kTrainKeys = {"epochs",    "batch_size", "mask_ratio",
                                          "lr",        "seed",       "log_every",
                                          "checkpoint_every", "warmup_steps"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool all_finite(const Encoder<float>& model) {
  for (const auto& [_, t] : model.named_parameters()) {
    for (float x : t.data()) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

std::string batch_words(const MaskedBatch& mb) {
  std::string out;
  for (std::size_t i = 0; i < mb.words.size(); ++i) {
    if (i) out += ", ";
    if (i == 8) {
      out += "... (" + std::to_string(mb.words.size()) + " words)";
      break;
    }
    out += mb.words[i];
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) fail("mask_ratio must lie in (0, 1)");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be a finite non-negative number");
  if (log_every < 1) fail("log_every must be >= 1");
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},         {"batch_size", batch_size},
              {"mask_ratio", mask_ratio}, {"lr", lr},
              {"seed", seed},             {"log_every", log_every},
              {"checkpoint_every", checkpoint_every}, {"warmup_steps", warmup_steps}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTrainKeys.count(key)) throw ConfigError("train config: unknown key '" + key + "'");
  }
  TrainConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("mask_ratio", c.mask_ratio);
    get("lr", c.lr);
    get("seed", c.seed);
    get("log_every", c.log_every);
    get("checkpoint_every", c.checkpoint_every);
    get("warmup_steps", c.warmup_steps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(io::read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("train config " + path.string() + ": " + e.what());
  }
}

std::vector<TrainExample> make_examples(const Lexicon& lexicon, const CharVocab& vocab,
                                        std::size_t max_chars) {
  std::vector<TrainExample> out;
  out.reserve(lexicon.size());
  for (const auto& e : lexicon) {
    out.push_back(TrainExample{e.word, vocab.encode_word(e.word, max_chars), e.labels});
  }
  return out;
}

std::size_t mask_count(std::size_t chars, double ratio) {
  if (chars == 0) return 0;
  // The epsilon keeps exact products such as 0.15 * 20 from rounding up.
  auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(chars) - 1e-9));
  return std::clamp<std::size_t>(k, 1, chars);
}

MaskedBatch mask_batch(std::span<const TrainExample> examples, double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("mask_batch: ratio must lie in (0, 1)");
  std::vector<TokenizedWord> corrupted;
  corrupted.reserve(examples.size());
  MaskedBatch mb;
  mb.mask_offsets.push_back(0);
  for (const auto& ex : examples) {
    TokenizedWord w = ex.tokens;
    const std::size_t s = w.ids.size();
    const std::size_t chars = w.char_count();
    if (chars == 0) throw ContractError("mask_batch: word '" + ex.word + "' has no characters");
    auto picks = sample_without_replacement(rng, chars, mask_count(chars, ratio));
    std::sort(picks.begin(), picks.end());
    for (std::size_t p : picks) {
      const std::size_t pos = 1 + p;
      mb.mask_rows.push_back(corrupted.size() * s + pos);
      mb.original_ids.push_back(w.ids[pos]);
      w.ids[pos] = kMask;
    }
    mb.mask_offsets.push_back(mb.mask_rows.size());
    const auto t = label_targets(ex.labels);
    mb.targets.insert(mb.targets.end(), t.begin(), t.end());
    mb.words.push_back(ex.word);
    corrupted.push_back(std::move(w));
  }
  mb.batch = Batch::from_words(corrupted);
  return mb;
}

std::string TrainLog::to_jsonl(std::size_t log_every, bool timing) const {
  if (log_every == 0) log_every = 1;
  std::string out;
  std::size_t e = 0;
  auto emit_epochs_until = [&](std::size_t segment, std::size_t epoch) {
    while (e < epochs.size() && (epochs[e].segment < segment ||
                                 (epochs[e].segment == segment && epochs[e].epoch < epoch))) {
      const auto& r = epochs[e++];
      json j{{"type", "epoch"}, {"segment", r.segment}, {"epoch", r.epoch},
             {"mlm", r.mlm},    {"multilabel", r.multilabel}, {"total", r.total}};
      if (timing) j["seconds"] = r.seconds;
      out += j.dump() + "\n";
    }
  };
  for (const auto& r : steps) {
    emit_epochs_until(r.segment, r.epoch);
    if (r.step % log_every != 0 && r.step != 1) continue;
    json j{{"type", "step"}, {"segment", r.segment}, {"step", r.step},
           {"epoch", r.epoch}, {"mlm", r.mlm}, {"multilabel", r.multilabel},
           {"total", r.total}, {"lr", r.lr}};
    if (timing) j["samples_per_sec"] = r.samples_per_sec;
    out += j.dump() + "\n";
  }
  emit_epochs_until(SIZE_MAX, SIZE_MAX);
  return out;
}

json TrainResult::meta(const TrainConfig& config) const {
  json m{{"segment", segment}, {"train_config", config.to_json()}};
  if (!log.epochs.empty()) {
    m["epochs_done"] = log.epochs.back().epoch;
    m["final_total"] = log.epochs.back().total;
  } else {
    m["epochs_done"] = 0;
  }
  return m;
}

namespace {

TrainResult run_segment(Encoder<float> model, std::size_t segment, const Lexicon& lexicon,
                        const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (lexicon.empty()) throw InputError("train: lexicon is empty");
  if (model.config().n_labels != kNumLangs) {
    throw ConfigError("train: model must have " + std::to_string(kNumLangs) + " label outputs");
  }
  const auto examples = make_examples(lexicon, model.vocab(), model.config().max_chars);

  TrainResult result{std::move(model), {}, segment, 0.0};
  Encoder<float>& m = result.model;
  m.set_requires_grad(true);
  Adam<float> opt(m.parameters(), AdamConfig{.lr = config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainExample> chunk;
  const auto t_run = Clock::now();
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    shuffle(order, rng);
    EpochRecord er{segment, epoch, 0, 0, 0, 0};
    std::size_t n_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto t_step = Clock::now();
      ++step;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      chunk.clear();
      for (std::size_t i = start; i < end; ++i) chunk.push_back(examples[order[i]]);
      const auto mb = mask_batch(chunk, config.mask_ratio, rng);

      const double lr = config.warmup_steps > 0 && step <= config.warmup_steps
                            ? config.lr * static_cast<double>(step) / config.warmup_steps
                            : config.lr;
      opt.set_lr(lr);

      StepRecord sr;
      {
        ad::Tape<float> tape;
        ad::TapeScope<float> scope(tape);
        auto out = m.forward(mb.batch, true, &rng);
        auto l_mlm = m.loss_mlm(out, mb.mask_rows, mb.original_ids);
        auto l_ml = m.loss_multilabel(out, mb.targets);
        auto total = loss_total(l_mlm, l_ml);
        sr.mlm = l_mlm.item();
        sr.multilabel = l_ml.item();
        sr.total = total.item();
        if (!std::isfinite(sr.total)) {
          throw NumericalError("non-finite loss at segment " + std::to_string(segment) +
                               ", epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step) + "; batch: " + batch_words(mb));
        }
        tape.backward(total);
      }
      opt.step();
      if (!all_finite(m)) {
        throw NumericalError("non-finite parameter after update at step " + std::to_string(step) +
                             "; batch: " + batch_words(mb));
      }
      sr.segment = segment;
      sr.step = step;
      sr.epoch = epoch;
      sr.lr = lr;
      const double dt = seconds_since(t_step);
      sr.samples_per_sec = dt > 0 ? static_cast<double>(chunk.size()) / dt : 0.0;
      result.log.steps.push_back(sr);
      er.mlm += sr.mlm;
      er.multilabel += sr.multilabel;
      er.total += sr.total;
      ++n_steps;
      if (hooks.progress && step % config.log_every == 0) {
        *hooks.progress << "[segment " << segment << "] epoch " << epoch << " step " << step
                        << " total " << sr.total << " (mlm " << sr.mlm << ", multilabel "
                        << sr.multilabel << ")\n";
      }
    }
    er.mlm /= n_steps;
    er.multilabel /= n_steps;
    er.total /= n_steps;
    er.seconds = seconds_since(t_epoch);
    result.log.epochs.push_back(er);
    if (hooks.progress) {
      *hooks.progress << "[segment " << segment << "] epoch " << epoch << " done: mean total "
                      << er.total << " (mlm " << er.mlm << ", multilabel " << er.multilabel
                      << ")\n";
    }
    if (hooks.checkpoint_dir && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      std::filesystem::create_directories(*hooks.checkpoint_dir);
      save_checkpoint(m, *hooks.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".chdz"),
                      result.meta(config));
    }
  }
  m.set_requires_grad(false);
  result.seconds = seconds_since(t_run);
  return result;
}

}  // namespace

TrainResult train(const Lexicon& lexicon, const ModelConfig& model_config,
                  std::shared_ptr<const CharVocab> vocab, const TrainConfig& config,
                  const TrainHooks& hooks) {
  return run_segment(Encoder<float>(model_config, std::move(vocab)), 0, lexicon, config, hooks);
}

TrainResult resume(const LoadedCheckpoint& checkpoint, const Lexicon& lexicon,
                   const TrainConfig& config, const TrainHooks& hooks) {
  const std::size_t segment = checkpoint.meta.value("segment", std::size_t{0}) + 1;
  return run_segment(checkpoint.model.cast<float>(), segment, lexicon, config, hooks);
}

}  // namespace chdzdt
