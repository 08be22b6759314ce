#include "commands.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "chdzdt/error.hpp"
#include "chdzdt/eval/ablation.hpp"
#include "chdzdt/eval/compose.hpp"
#include "chdzdt/eval/downstream.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/eval/noise.hpp"
#include "chdzdt/eval/probe.hpp"
#include "chdzdt/eval/report.hpp"
#include "chdzdt/io.hpp"
#include "chdzdt/pretrain.hpp"
#include "chdzdt/toydata.hpp"
#include "chdzdt/utf8.hpp"
#include "manifest.hpp"

namespace chdzdt::cli {

using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Named references into a config struct, so a JSON file and command-line
// flags can be layered over the defaults.
class Bindings {
 public:
  template <typename T>
  Bindings& add(const std::string& key, T& ref) {
    setters_[key] = [&ref, key](const json& v) {
      try {
        ref = v.get<T>();
      } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
      }
    };
    getters_[key] = [&ref] { return json(ref); };
    return *this;
  }

  bool has(const std::string& key) const { return setters_.count(key) != 0; }

  void apply(const json& j, const std::string& what) const {
    if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
      auto it = setters_.find(k);
      if (it == setters_.end()) throw ConfigError(what + ": unknown key '" + k + "'");
      it->second(v);
    }
  }

  template <typename T>
  void set_flag(const std::string& flag, const std::string& key, const std::optional<T>& value,
                const std::string& task) const {
    if (!value) return;
    auto it = setters_.find(key);
    if (it == setters_.end()) throw UsageError("--" + flag + " does not apply to task " + task);
    it->second(json(*value));
  }

  json to_json() const {
    json out = json::object();
    for (const auto& [k, g] : getters_) out[k] = g();
    return out;
  }

 private:
  std::map<std::string, std::function<void(const json&)>> setters_;
  std::map<std::string, std::function<json()>> getters_;
};

std::shared_ptr<const CharVocab> load_vocab(const std::optional<fs::path>& path) {
  if (!path) return std::make_shared<const CharVocab>(CharVocab::default_vocab());
  return std::make_shared<const CharVocab>(CharVocab::build(VocabSpec::load(*path)));
}

void ensure_parent(const fs::path& out) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
}

std::ostream& progress_stream(bool quiet) {
  static std::ostream null(nullptr);
  return quiet ? null : std::cerr;
}

}  // namespace

// ---- preprocess ----

int run_preprocess(const PreprocessOptions& o) {
  RunManifest manifest("preprocess");
  if (!fs::is_directory(o.in)) throw IoError("input directory not found: " + o.in.string());

  std::map<std::string, std::pair<Lang, SourceKind>> mapping;
  const auto lines = io::read_lines(o.labels);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    const auto where = o.labels.string() + ":" + std::to_string(i + 1) + ": ";
    if (cols.size() < 2 || cols.size() > 3) throw InputError(where + "expected file TAB label [TAB social|standard]");
    const auto lang = parse_lang(cols[1]);
    if (!lang) throw InputError(where + "unknown label '" + cols[1] + "'");
    SourceKind kind = SourceKind::kStandard;
    if (cols.size() == 3) {
      if (cols[2] == "social") kind = SourceKind::kSocial;
      else if (cols[2] != "standard") throw InputError(where + "kind must be social or standard");
    }
    if (!mapping.emplace(cols[0], std::make_pair(*lang, kind)).second) {
      throw InputError(where + "duplicate file '" + cols[0] + "'");
    }
  }

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.in)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no input files in " + o.in.string());

  std::vector<SourceStream> streams;
  for (const auto& f : files) {
    auto it = mapping.find(f.filename().string());
    if (it == mapping.end()) throw InputError(f.filename().string() + " has no entry in " + o.labels.string());
    streams.push_back({f.filename().string(), f, it->second.first, it->second.second});
    mapping.erase(it);
  }
  if (!mapping.empty()) throw InputError("label map names a missing file: " + mapping.begin()->first);

  const auto rules = o.rules ? NormRules::load(*o.rules) : NormRules::default_rules();
  const auto vocab = load_vocab(o.vocab);
  const Normalizer normalizer(rules, vocab->spec());
  const auto lexicon = build_lexicon(streams, normalizer, o.max_len);
  const auto stats = lexicon_stats(lexicon, 5, o.max_len);

  ensure_parent(o.out);
  auto stats_path = o.out;
  stats_path.replace_extension(".stats.json");
  io::write_file_atomic(o.out, lexicon_to_tsv(lexicon));
  io::write_file_atomic(stats_path, stats.to_json().dump(2) + "\n");
  std::cout << stats.to_table();

  manifest.set_config({{"rules", rules.to_json()}, {"max_len", o.max_len}});
  manifest.add_input(o.in);
  manifest.add_input(o.labels);
  if (o.rules) manifest.add_input(*o.rules);
  if (o.vocab) manifest.add_input(*o.vocab);
  manifest.add_output(o.out);
  manifest.add_output(stats_path);
  manifest.write(manifest_path_for(o.out));
  return 0;
}

// ---- pretrain ----

int run_pretrain(const PretrainOptions& o) {
  RunManifest manifest("pretrain");
  auto vocab = load_vocab(o.vocab);
  const auto lexicon = load_lexicon(o.lexicon);

  TrainConfig tc = o.train_config ? TrainConfig::load(*o.train_config) : TrainConfig{};
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.log_every) tc.log_every = *o.log_every;
  if (o.checkpoint_every) tc.checkpoint_every = *o.checkpoint_every;
  if (o.warmup_steps) tc.warmup_steps = *o.warmup_steps;
  if (o.lr) tc.lr = *o.lr;
  if (o.mask_ratio) tc.mask_ratio = *o.mask_ratio;
  if (o.seed) tc.seed = *o.seed;
  tc.validate();

  TrainHooks hooks;
  hooks.progress = &progress_stream(o.quiet);
  if (tc.checkpoint_every > 0) {
    auto dir = o.out.parent_path() / (o.out.stem().string() + "_checkpoints");
    fs::create_directories(dir);
    hooks.checkpoint_dir = dir;
  }

  std::optional<TrainResult> result;
  ModelConfig mc;
  if (o.resume) {
    if (o.model_config || o.blocks || o.heads || o.hidden || o.max_chars || o.dropout || o.init || o.vocab) {
      throw UsageError("--resume takes the architecture and vocabulary from the checkpoint");
    }
    const auto ckpt = load_checkpoint(*o.resume);
    mc = ckpt.model.config();
    manifest.add_input(*o.resume);
    result.emplace(resume(ckpt, lexicon, tc, hooks));
  } else {
    if (o.model_config) mc = ModelConfig::from_json(read_json(*o.model_config));
    if (o.blocks) mc.n_blocks = *o.blocks;
    if (o.heads) mc.n_heads = *o.heads;
    if (o.hidden) mc.hidden = *o.hidden;
    if (o.max_chars) mc.max_chars = *o.max_chars;
    if (o.dropout) mc.dropout = *o.dropout;
    if (o.init) mc.init_scheme = *o.init;
    if (o.seed) mc.seed = *o.seed;
    if (mc.vocab_size == 0) mc.vocab_size = vocab->size();
    mc.validate();
    result.emplace(train(lexicon, mc, vocab, tc, hooks));
  }

  ensure_parent(o.out);
  auto log_path = o.out;
  log_path.replace_extension(".log.jsonl");
  save_checkpoint(result->model, o.out, result->meta(tc));
  io::write_file_atomic(log_path, result->log.to_jsonl(tc.log_every));

  manifest.set_config({{"model", mc.to_json()}, {"train", tc.to_json()}});
  manifest.set_seed(tc.seed);
  manifest.add_input(o.lexicon);
  if (o.model_config) manifest.add_input(*o.model_config);
  if (o.train_config) manifest.add_input(*o.train_config);
  if (o.vocab) manifest.add_input(*o.vocab);
  manifest.add_output(o.out);
  manifest.add_output(log_path);
  manifest.write(manifest_path_for(o.out));
  return 0;
}

// ---- encode ----

int run_encode(const EncodeOptions& o) {
  RunManifest manifest("encode");
  auto ckpt = load_checkpoint(o.ckpt);
  const auto& model = ckpt.model;
  const std::string text = o.words == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                          : io::read_file(o.words);
  std::vector<std::string> words;
  std::size_t skipped = 0;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto w = std::string(io::trim(lines[i]));
    if (w.empty()) continue;
    try {
      model.vocab().encode_word(w, model.config().max_chars);
      words.push_back(w);
    } catch (const InputError& e) {
      std::cerr << "warning: line " << i + 1 << " skipped: " << e.what() << '\n';
      ++skipped;
    }
  }
  const std::size_t d = model.config().hidden;
  eval::Matrix m(words.size(), d);
  if (!words.empty()) {
    const auto flat = model.embed_words(words);
    std::copy(flat.begin(), flat.end(), m.data.begin());
  }
  ensure_parent(o.out);
  io::write_file_atomic(o.out, eval::format_embedding_tsv(words, m));
  std::cerr << "encoded " << words.size() << " words, skipped " << skipped << '\n';

  manifest.set_config({{"model", model.config().to_json()}, {"encoded", words.size()}, {"skipped", skipped}});
  manifest.set_seed(model.config().seed);
  manifest.add_input(o.ckpt);
  if (o.words != "-") manifest.add_input(o.words);
  manifest.add_output(o.out);
  manifest.write(manifest_path_for(o.out));
  return 0;
}

// ---- eval ----

const std::vector<std::string>& eval_tasks() {
  static const std::vector<std::string> tasks = {"morph", "noise", "probe", "compose",
                                                 "sim",   "tag",   "pos",   "sa"};
  return tasks;
}

namespace {

bool is_table_path(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".tsv" || ext == ".txt" || ext == ".vec";
}

struct LoadedEmbedder {
  std::unique_ptr<eval::Embedder> embedder;
  std::shared_ptr<const Encoder<float>> encoder;
};

LoadedEmbedder load_embedder(const fs::path& path) {
  LoadedEmbedder out;
  if (is_table_path(path)) {
    out.embedder = std::make_unique<eval::TableEmbedder>(eval::TableEmbedder::load(path));
    return out;
  }
  auto ckpt = load_checkpoint(path);
  out.encoder = std::make_shared<const Encoder<float>>(std::move(ckpt.model));
  out.embedder = std::make_unique<eval::EncoderEmbedder>(out.encoder, path.stem().string());
  return out;
}

void expect_files(const EvalOptions& o, std::size_t lo, std::size_t hi) {
  if (o.data.size() < lo || o.data.size() > hi) {
    throw UsageError("task " + o.task + " takes " +
                     (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)) +
                     " --data file(s), got " + std::to_string(o.data.size()));
  }
}

// Train/test from one file (seeded holdout) or from two.
template <typename T, typename Loader>
std::pair<std::vector<T>, std::vector<T>> train_test(const EvalOptions& o, Loader load, double fraction,
                                                     std::uint64_t seed) {
  auto train = load(o.data[0]);
  if (o.data.size() == 2) return {std::move(train), load(o.data[1])};
  const auto split = eval::holdout(train.size(), fraction, seed);
  return {eval::select(train, split.train), eval::select(train, split.test)};
}

Bindings decoder_bindings(eval::DecoderConfig& c) {
  Bindings b;
  b.add("gru_hidden", c.gru_hidden)
      .add("dense", c.dense)
      .add("max_epochs", c.max_epochs)
      .add("max_words", c.max_words)
      .add("batch_size", c.batch_size)
      .add("lr", c.lr)
      .add("stop_error", c.stop_error)
      .add("seed", c.seed);
  return b;
}

Bindings probe_bindings(eval::ProbeConfig& c) {
  Bindings b;
  b.add("train_fraction", c.train_fraction)
      .add("epochs", c.epochs)
      .add("lr", c.lr)
      .add("threshold", c.threshold)
      .add("seed", c.seed);
  return b;
}

void apply_eval_flags(const Bindings& b, const EvalOptions& o, bool decoder) {
  b.set_flag("seed", "seed", o.seed, o.task);
  b.set_flag("train-fraction", "train_fraction", o.train_fraction, o.task);
  b.set_flag("lr", "lr", o.lr, o.task);
  b.set_flag("epochs", decoder ? "max_epochs" : "epochs", o.epochs, o.task);
  b.set_flag("gru-hidden", "gru_hidden", o.gru_hidden, o.task);
  b.set_flag("dense", "dense", o.dense, o.task);
  b.set_flag("max-words", "max_words", o.max_words, o.task);
  b.set_flag("batch-size", "batch_size", o.batch_size, o.task);
  b.set_flag("objective", "objective", o.objective, o.task);
}

}  // namespace

int run_eval(const EvalOptions& o) {
  RunManifest manifest("eval");
  const auto& tasks = eval_tasks();
  if (std::find(tasks.begin(), tasks.end(), o.task) == tasks.end()) throw UsageError("unknown task " + o.task);
  const auto mode = eval::parse_train_mode(o.mode);
  const bool decoder_task = o.task == "tag" || o.task == "pos" || o.task == "sa";
  if (mode == eval::TrainMode::kFinetune && !decoder_task) {
    throw UsageError("--mode finetune applies to tag, pos and sa only");
  }
  if (mode == eval::TrainMode::kFinetune && is_table_path(o.embedder)) {
    throw UsageError("external vectors are frozen: finetune needs a checkpoint embedder");
  }
  if (!o.kinds.empty() && o.task != "compose") throw UsageError("--kinds applies to task compose only");

  const json file_config = o.config ? read_json(*o.config) : json::object();
  const std::string config_name = o.config ? o.config->string() : "config";
  std::uint64_t seed = o.seed.value_or(42);
  json report;
  json config;
  std::shared_ptr<Encoder<float>> tuned;

  // Flag-only tasks take a seed and nothing else.
  auto seed_only = [&] {
    Bindings b;
    b.add("seed", seed);
    b.apply(file_config, config_name);
    apply_eval_flags(b, o, false);
    config = b.to_json();
  };

  auto loaded = load_embedder(o.embedder);
  const eval::Embedder& embedder = *loaded.embedder;
  const eval::WordSource source{&embedder, loaded.encoder};

  if (o.task == "morph") {
    expect_files(o, 1, 1);
    seed_only();
    report = eval::to_json(eval::cluster_report(embedder, eval::load_clusters(o.data[0]), seed));
  } else if (o.task == "sim") {
    expect_files(o, 1, 1);
    seed_only();
    report = eval::to_json(eval::similarity_corr(embedder, eval::load_similarity(o.data[0])));
  } else if (o.task == "noise") {
    expect_files(o, 1, 4);
    seed_only();
    std::map<eval::NoiseMode, std::vector<eval::NoiseTuple>> tuples;
    std::vector<eval::Cluster> variants;
    bool have_variants = false;
    for (const auto& p : o.data) {
      const auto ext = p.extension().string();
      if (ext == ".star" || ext == ".hash" || ext == ".sim") {
        auto [m, t] = eval::load_tuples(p);
        if (!tuples.emplace(m, std::move(t)).second) {
          throw UsageError("two tuple files for mode " + std::string(eval::to_string(m)));
        }
      } else {
        if (have_variants) throw UsageError("at most one variant cluster file");
        variants = eval::load_clusters(p);
        have_variants = true;
      }
    }
    report = eval::to_json(eval::noise_report(embedder, tuples, variants, seed));
  } else if (o.task == "probe") {
    expect_files(o, 1, 1);
    eval::ProbeConfig pc;
    auto b = probe_bindings(pc);
    b.apply(file_config, config_name);
    apply_eval_flags(b, o, false);
    config = b.to_json();
    seed = pc.seed;
    report = eval::to_json(eval::probe_affixes(embedder, eval::load_affixes(o.data[0]), pc));
  } else if (o.task == "compose") {
    expect_files(o, 1, 2);
    eval::ComposeConfig cc;
    double fraction = 0.8;
    std::string objective = "mse";
    Bindings b;
    b.add("epochs", cc.epochs)
        .add("lr", cc.lr)
        .add("objective", objective)
        .add("wmul_shift", cc.wmul_shift)
        .add("epsilon", cc.epsilon)
        .add("train_fraction", fraction)
        .add("seed", cc.seed);
    b.apply(file_config, config_name);
    apply_eval_flags(b, o, false);
    if (objective != "mse" && objective != "cosine") throw ConfigError("objective must be mse or cosine");
    cc.cosine_objective = objective == "cosine";
    config = b.to_json();
    seed = cc.seed;
    std::vector<eval::CompositionKind> kinds;
    for (const auto& k : o.kinds) kinds.push_back(eval::parse_composition_kind(k));
    if (kinds.empty()) kinds = eval::all_composition_kinds();
    auto [train_rows, test_rows] = train_test<eval::CompositionWords>(
        o, [](const fs::path& p) { return eval::load_composition(p); }, fraction, seed);
    const auto train = eval::embed_triples(embedder, train_rows);
    const auto test = eval::embed_triples(embedder, test_rows);
    report = {{"n_train", train.size()}, {"n_test", test.size()}, {"models", json::array()}};
    for (auto k : kinds) {
      const auto model = eval::compose_fit(k, train, cc);
      report["models"].push_back(eval::to_json(model, eval::compose_eval(model, test), false));
    }
  } else {
    expect_files(o, 1, 2);
    auto dc = o.task == "tag" ? eval::DecoderConfig::morph()
              : o.task == "pos" ? eval::DecoderConfig::pos()
                                : eval::DecoderConfig::sentiment();
    double fraction = 0.8;
    auto b = decoder_bindings(dc);
    b.add("train_fraction", fraction);
    b.apply(file_config, config_name);
    apply_eval_flags(b, o, true);
    config = b.to_json();
    seed = dc.seed;
    if (o.task == "tag") {
      auto [tr, te] = train_test<eval::MorphRow>(o, [](const fs::path& p) { return eval::load_morph(p); },
                                                 fraction, seed);
      auto r = eval::morph_tagger(source, tr, te, mode, dc);
      report = eval::to_json(r);
      tuned = r.tuned;
    } else if (o.task == "pos") {
      auto [tr, te] = train_test<eval::TaggedSentence>(o, [](const fs::path& p) { return eval::load_pos(p); },
                                                       fraction, seed);
      auto r = eval::pos_tagger(source, tr, te, mode, dc);
      report = eval::to_json(r);
      tuned = r.tuned;
    } else {
      auto [tr, te] = train_test<eval::SentimentExample>(
          o, [](const fs::path& p) { return eval::load_sentiment(p); }, fraction, seed);
      auto r = eval::sentiment_classifier(source, tr, te, mode, dc);
      report = eval::to_json(r);
      tuned = r.tuned;
    }
  }

  const json out = {{"task", o.task},
                    {"embedder", embedder.name()},
                    {"dim", embedder.dim()},
                    {"mode", eval::to_string(mode)},
                    {"config", config},
                    {"report", report}};
  ensure_parent(o.out);
  io::write_file_atomic(o.out, out.dump(2) + "\n");
  manifest.add_output(o.out);
  if (tuned) {
    auto ckpt_path = o.out;
    ckpt_path.replace_extension(".finetuned.chdz");
    save_checkpoint(*tuned, ckpt_path, {{"finetuned_on", o.task}});
    manifest.add_output(ckpt_path);
  }
  if (!o.quiet) std::cout << eval::format_table(report);

  manifest.set_config({{"task", o.task}, {"mode", eval::to_string(mode)}, {"settings", config}});
  manifest.set_seed(seed);
  manifest.add_input(o.embedder);
  for (const auto& p : o.data) manifest.add_input(p);
  if (o.config) manifest.add_input(*o.config);
  manifest.write(manifest_path_for(o.out));
  return 0;
}

// ---- ablation ----

int run_ablation(const AblationOptions& o) {
  RunManifest manifest("ablation");
  auto vocab = load_vocab(o.vocab);
  const auto lexicon = load_lexicon(o.lexicon);

  ModelConfig base = o.model_config ? ModelConfig::from_json(read_json(*o.model_config)) : ModelConfig{};
  if (base.vocab_size == 0) base.vocab_size = vocab->size();
  if (o.seed) base.seed = *o.seed;
  const auto grid = o.grid ? eval::parse_grid(read_json(*o.grid), base) : eval::default_grid(base);

  TrainConfig tc = o.train_config ? TrainConfig::load(*o.train_config) : TrainConfig{};
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.seed) tc.seed = *o.seed;
  tc.validate();

  std::vector<std::string> evals = o.evals;
  if (evals.empty()) evals = {"morph"};
  const auto& known = eval::ablation_evals();
  eval::EvalBundle bundle;
  bundle.seed = tc.seed;
  if (o.config) {
    const auto j = read_json(*o.config);
    for (const auto& [k, v] : j.items()) {
      if (k == "probe") probe_bindings(bundle.probe_config).apply(v, o.config->string() + ".probe");
      else if (k == "pos") decoder_bindings(bundle.pos_config).apply(v, o.config->string() + ".pos");
      else if (k == "sa") decoder_bindings(bundle.sa_config).apply(v, o.config->string() + ".sa");
      else throw ConfigError(o.config->string() + ": unknown key '" + k + "'");
    }
  }
  auto split_pair = [&](const std::vector<fs::path>& files, auto load, auto& train, auto& test) {
    if (files.empty() || files.size() > 2) return false;
    train = load(files[0]);
    if (files.size() == 2) {
      test = load(files[1]);
    } else {
      auto all = train;
      const auto split = eval::holdout(all.size(), 0.8, tc.seed);
      train = eval::select(all, split.train);
      test = eval::select(all, split.test);
    }
    return true;
  };
  for (const auto& e : evals) {
    if (std::find(known.begin(), known.end(), e) == known.end()) throw UsageError("unknown eval " + e);
    bool ok = true;
    if (e == "morph") {
      ok = o.clusters.has_value();
      if (ok) bundle.clusters = eval::load_clusters(*o.clusters);
    } else if (e == "noise") {
      ok = !o.noise.empty();
      for (const auto& p : o.noise) {
        auto [m, t] = eval::load_tuples(p);
        bundle.noise_tuples[m] = std::move(t);
      }
      if (o.noise_clusters) bundle.noise_clusters = eval::load_clusters(*o.noise_clusters);
    } else if (e == "probe") {
      ok = o.affixes.has_value();
      if (ok) bundle.affixes = eval::load_affixes(*o.affixes);
    } else if (e == "pos") {
      ok = split_pair(o.pos, [](const fs::path& p) { return eval::load_pos(p); }, bundle.pos_train,
                      bundle.pos_test);
    } else if (e == "sa") {
      ok = split_pair(o.sa, [](const fs::path& p) { return eval::load_sentiment(p); }, bundle.sa_train,
                      bundle.sa_test);
    }
    if (!ok) throw UsageError("eval " + e + " needs its data flag (see --help)");
  }

  fs::create_directories(o.out);
  eval::AblationHooks hooks;
  hooks.out_dir = o.out;
  hooks.progress = &progress_stream(o.quiet);
  const auto report = eval::ablation_sweep(grid, lexicon, vocab, tc, evals, bundle, hooks);

  io::write_file_atomic(o.out / "ablation.json", report.to_json(!o.no_timing).dump(2) + "\n");
  io::write_file_atomic(o.out / "ablation.csv", report.to_csv(!o.no_timing));
  if (!o.quiet) std::cout << report.to_table();

  json grid_json = json::array();
  for (const auto& c : grid) grid_json.push_back(c.to_json());
  manifest.set_config({{"grid", grid_json}, {"train", tc.to_json()}, {"evals", evals}});
  manifest.set_seed(tc.seed);
  manifest.add_input(o.lexicon);
  for (const auto& p : {o.grid, o.model_config, o.train_config, o.vocab, o.config, o.clusters,
                        o.noise_clusters, o.affixes}) {
    if (p) manifest.add_input(*p);
  }
  for (const auto* list : {&o.noise, &o.pos, &o.sa}) {
    for (const auto& p : *list) manifest.add_input(p);
  }
  manifest.add_output(o.out / "ablation.json");
  manifest.add_output(o.out / "ablation.csv");
  manifest.write(o.out / "manifest.json");
  // Partial failure still writes the report but is not a success.
  return report.all_ok() ? 0 : 2;
}

// ---- toy-data ----

namespace {

double bigram_jaccard(const std::string& a, const std::string& b) {
  auto grams = [](const std::string& w) {
    std::set<std::string> g;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) g.insert(w.substr(i, 2));
    return g;
  };
  const auto ga = grams(a), gb = grams(b);
  std::size_t inter = 0;
  for (const auto& g : ga) inter += gb.count(g);
  const std::size_t uni = ga.size() + gb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

int run_toy_data(const ToyDataOptions& o) {
  RunManifest manifest("toy-data");
  toy::RootAffixLanguage lang;
  const auto lexicon = toy::trilingual_lexicon(o.seed, o.words, &lang);
  fs::create_directories(o.out);

  std::vector<eval::AffixRow> affixes;
  std::vector<eval::CompositionWords> composition;
  std::vector<eval::MorphRow> morph;
  std::vector<std::string> words;
  for (std::size_t r = 0; r < lang.roots.size(); ++r) {
    for (std::size_t a = 0; a < lang.affixes.size(); ++a) {
      const auto& affix = lang.affixes[a];
      const auto& w = lang.words[r][a];
      const bool suffix = affix.front() == '-';
      const auto bare = suffix ? affix.substr(1) : affix.substr(0, affix.size() - 1);
      words.push_back(w);
      affixes.push_back({w, {affix}});
      composition.push_back({w, suffix ? "" : bare, lang.roots[r], suffix ? bare : ""});
      morph.push_back({w, {{"Position", suffix ? "suffix" : "prefix"}, {"Affix", bare}}});
    }
  }

  std::vector<eval::SimilarityPair> sim;
  for (std::size_t i = 0; i + 7 < words.size(); i += 7) {
    sim.push_back({words[i], words[i + 7], bigram_jaccard(words[i], words[i + 7])});
    sim.push_back({words[i], words[words.size() - 1 - i], bigram_jaccard(words[i], words[words.size() - 1 - i])});
  }

  std::vector<std::string> long_words;
  for (const auto& e : lexicon) {
    if (utf8::length(e.word) >= 5) long_words.push_back(e.word);
  }
  const auto table = eval::ObfuscationTable::default_table();

  const std::map<std::string, std::string> files = {
      {"lexicon.tsv", lexicon_to_tsv(lexicon)},
      {"clusters.tsv", eval::format_clusters(toy::root_clusters(lang))},
      {"affixes.tsv", eval::format_affixes(affixes)},
      {"composition.tsv", eval::format_composition(composition)},
      {"morph.tsv", eval::format_morph(morph)},
      {"similarity.tsv", eval::format_similarity(sim)},
      {"pos.tsv", eval::format_pos(toy::suffix_pos(200, o.seed))},
      {"sentiment.tsv", eval::format_sentiment(toy::marker_sentiment(300, o.seed))},
      {"noise.star", eval::format_tuples(eval::make_tuples(long_words, eval::NoiseMode::kStar, 1, table, o.seed))},
      {"noise.hash", eval::format_tuples(eval::make_tuples(long_words, eval::NoiseMode::kHash, 1, table, o.seed))},
      {"noise.sim", eval::format_tuples(eval::make_tuples(long_words, eval::NoiseMode::kSimilar, 1, table, o.seed))},
      {"noise_clusters.tsv", eval::format_clusters(eval::make_variant_clusters(
                                 std::vector<std::string>(long_words.begin(),
                                                          long_words.begin() + std::min<std::size_t>(40, long_words.size())),
                                 4, table, o.seed))}};
  for (const auto& [name, body] : files) {
    io::write_file_atomic(o.out / name, body);
    manifest.add_output(o.out / name);
    std::cerr << "wrote " << (o.out / name).string() << '\n';
  }
  manifest.set_config({{"words", o.words}});
  manifest.set_seed(o.seed);
  manifest.write(o.out / "manifest.json");
  return 0;
}

}  // namespace chdzdt::cli
