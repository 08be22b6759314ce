#include "chdzdt/eval/ablation.hpp"

#include <chrono>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "chdzdt/error.hpp"
#include "chdzdt/eval/metrics.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt::eval {

using nlohmann::json;

std::vector<ModelConfig> default_grid(const ModelConfig& base) {
  const std::size_t rows[][3] = {{2, 2, 8}, {1, 2, 16}, {2, 1, 16}, {2, 2, 16},
                                 {2, 4, 16}, {3, 2, 16}, {2, 2, 32}};
  std::vector<ModelConfig> out;
  for (const auto& r : rows) {
    ModelConfig c = base;
    c.n_blocks = r[0];
    c.n_heads = r[1];
    c.hidden = r[2];
    out.push_back(c);
  }
  return out;
}

std::vector<ModelConfig> parse_grid(const json& j, const ModelConfig& base) {
  json defaults = base.to_json();
  const json* variants = &j;
  if (j.is_object()) {
    if (j.contains("base")) {
      if (!j.at("base").is_object()) throw ConfigError("grid: 'base' must be an object");
      defaults.update(j.at("base"));
    }
    if (!j.contains("variants")) throw ConfigError("grid: missing 'variants'");
    for (const auto& [key, _] : j.items()) {
      if (key != "base" && key != "variants") throw ConfigError("grid: unknown key '" + key + "'");
    }
    variants = &j.at("variants");
  }
  if (!variants->is_array() || variants->empty()) throw ConfigError("grid: expected a non-empty array of configs");
  std::vector<ModelConfig> out;
  for (const auto& v : *variants) {
    if (!v.is_object()) throw ConfigError("grid: every variant must be an object");
    json merged = defaults;
    merged.update(v);
    out.push_back(ModelConfig::from_json(merged));
  }
  return out;
}

const std::vector<std::string>& ablation_evals() {
  static const std::vector<std::string> names = {"morph", "noise", "probe", "pos", "sa"};
  return names;
}

namespace {

std::vector<std::string> metric_columns(const std::vector<std::string>& evals, const EvalBundle& b) {
  std::vector<std::string> cols;
  for (const auto& e : evals) {
    if (e == "morph") {
      cols.insert(cols.end(), {"morph.acs", "morph.aed", "morph.silhouette", "morph.ari"});
    } else if (e == "noise") {
      for (const auto& [mode, _] : b.noise_tuples) cols.push_back("noise.acs1_" + std::string(to_string(mode)));
      if (!b.noise_clusters.empty()) cols.insert(cols.end(), {"noise.ari", "noise.acs"});
    } else if (e == "probe") {
      cols.insert(cols.end(), {"probe.precision", "probe.recall", "probe.f1"});
    } else if (e == "pos") {
      cols.push_back("pos.accuracy");
    } else if (e == "sa") {
      cols.push_back("sa.accuracy");
    } else {
      throw ConfigError("unknown eval '" + e + "' (morph, noise, probe, pos, sa)");
    }
  }
  return cols;
}

// Runs one eval and stores its metrics; a throw marks all of its columns.
void run_eval(const std::string& eval, const std::shared_ptr<const Encoder<float>>& model,
              const EvalBundle& b, const std::vector<std::string>& columns, VariantResult& out) {
  const std::string prefix = eval + ".";
  try {
    EncoderEmbedder emb(model);
    auto& m = out.metrics;
    if (eval == "morph") {
      const auto r = cluster_report(emb, b.clusters, b.seed);
      m["morph.acs"] = r.acs;
      m["morph.aed"] = r.aed;
      m["morph.silhouette"] = r.silhouette;
      m["morph.ari"] = r.ari;
    } else if (eval == "noise") {
      const auto r = noise_report(emb, b.noise_tuples, b.noise_clusters, b.seed);
      for (const auto& mr : r.modes) m["noise.acs1_" + std::string(to_string(mr.mode))] = mr.acs;
      if (r.has_variants) {
        m["noise.ari"] = r.variants.ari;
        m["noise.acs"] = r.variants.acs;
      }
    } else if (eval == "probe") {
      const auto r = probe_affixes(emb, b.affixes, b.probe_config);
      m["probe.precision"] = r.macro.precision;
      m["probe.recall"] = r.macro.recall;
      m["probe.f1"] = r.macro.f1;
    } else if (eval == "pos") {
      m["pos.accuracy"] = pos_tagger({&emb, model}, b.pos_train, b.pos_test, TrainMode::kFrozen, b.pos_config).accuracy;
    } else if (eval == "sa") {
      m["sa.accuracy"] =
          sentiment_classifier({&emb, model}, b.sa_train, b.sa_test, TrainMode::kFrozen, b.sa_config).accuracy;
    }
  } catch (const std::exception& e) {
    for (const auto& c : columns) {
      if (c.rfind(prefix, 0) == 0) {
        out.metrics.erase(c);
        out.failed[c] = e.what();
      }
    }
  }
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << x;
  return s.str();
}

}  // namespace

AblationReport ablation_sweep(const std::vector<ModelConfig>& grid, const Lexicon& lexicon,
                              std::shared_ptr<const CharVocab> vocab, const TrainConfig& train_config,
                              const std::vector<std::string>& evals, const EvalBundle& bundle,
                              const AblationHooks& hooks) {
  if (grid.empty()) throw ConfigError("ablation grid is empty");
  AblationReport report;
  report.metrics = metric_columns(evals, bundle);
  if (hooks.out_dir) std::filesystem::create_directories(*hooks.out_dir);

  std::set<std::string> names;
  for (const auto& base_cfg : grid) {
    VariantResult v;
    v.config = base_cfg;
    if (v.config.vocab_size == 0) v.config.vocab_size = vocab->size();
    v.name = v.config.name();
    for (int k = 2; !names.insert(v.name).second; ++k) v.name = v.config.name() + "_" + std::to_string(k);
    if (hooks.progress) *hooks.progress << "== variant " << v.name << "\n";

    std::shared_ptr<const Encoder<float>> model;
    try {
      v.config.validate();
      v.params = count_params(v.config);
      auto result = train(lexicon, v.config, vocab, train_config, {std::nullopt, hooks.progress});
      v.seconds = result.seconds;
      const double samples = static_cast<double>(lexicon.size()) * static_cast<double>(train_config.epochs);
      v.samples_per_sec = result.seconds > 0 ? samples / result.seconds : 0;
      v.final_loss = result.log.epochs.empty() ? 0 : result.log.epochs.back().total;
      if (hooks.out_dir) {
        save_checkpoint(result.model, *hooks.out_dir / (v.name + ".chdz"), result.meta(train_config));
        io::write_file_atomic(*hooks.out_dir / (v.name + ".log.jsonl"),
                              result.log.to_jsonl(train_config.log_every));
      }
      model = std::make_shared<const Encoder<float>>(std::move(result.model));
      v.trained = true;
    } catch (const std::exception& e) {
      v.error = e.what();
      for (const auto& c : report.metrics) v.failed[c] = "training failed";
      if (hooks.progress) *hooks.progress << "variant " << v.name << " failed: " << e.what() << "\n";
    }
    if (model) {
      for (const auto& e : evals) run_eval(e, model, bundle, report.metrics, v);
    }
    report.variants.push_back(std::move(v));
  }
  return report;
}

bool AblationReport::all_ok() const {
  for (const auto& v : variants) {
    if (!v.trained || !v.failed.empty()) return false;
  }
  return true;
}

json AblationReport::to_json(bool timing) const {
  json vs = json::array();
  for (const auto& v : variants) {
    json metrics_json = json::object();
    for (const auto& c : metrics) {
      if (auto it = v.metrics.find(c); it != v.metrics.end()) metrics_json[c] = it->second;
    }
    json o = {{"name", v.name},
              {"config", v.config.to_json()},
              {"params", v.params},
              {"trained", v.trained},
              {"final_loss", v.final_loss},
              {"metrics", metrics_json},
              {"failed", v.failed}};
    if (!v.error.empty()) o["error"] = v.error;
    if (timing) {
      o["seconds"] = v.seconds;
      o["samples_per_sec"] = v.samples_per_sec;
    }
    vs.push_back(std::move(o));
  }
  return json{{"metrics", metrics}, {"variants", vs}};
}

std::string AblationReport::to_csv(bool timing) const {
  std::string out = "variant,n_blocks,n_heads,hidden,params";
  if (timing) out += ",seconds,samples_per_sec";
  out += ",final_loss";
  for (const auto& c : metrics) out += "," + c;
  out += '\n';
  for (const auto& v : variants) {
    out += v.name + "," + std::to_string(v.config.n_blocks) + "," + std::to_string(v.config.n_heads) + "," +
           std::to_string(v.config.hidden) + "," + (v.params ? std::to_string(v.params) : std::string());
    if (timing) {
      out += v.trained ? "," + fmt(v.seconds, 3) + "," + fmt(v.samples_per_sec, 3) : std::string(",failed,failed");
    }
    out += "," + (v.trained ? fmt(v.final_loss, 6) : std::string("failed"));
    for (const auto& c : metrics) {
      auto it = v.metrics.find(c);
      out += "," + (it == v.metrics.end() ? std::string("failed") : fmt(it->second, 6));
    }
    out += '\n';
  }
  return out;
}

std::string AblationReport::to_table() const {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"metric"};
  for (const auto& v : variants) header.push_back(v.name);
  rows.push_back(header);
  auto add_row = [&](const std::string& label, auto cell) {
    std::vector<std::string> r = {label};
    for (const auto& v : variants) r.push_back(cell(v));
    rows.push_back(std::move(r));
  };
  add_row("params", [](const VariantResult& v) { return v.params ? std::to_string(v.params) : std::string("-"); });
  add_row("seconds", [](const VariantResult& v) { return v.trained ? fmt(v.seconds, 1) : "FAILED"; });
  add_row("samples/s", [](const VariantResult& v) { return v.trained ? fmt(v.samples_per_sec, 1) : "FAILED"; });
  add_row("final_loss", [](const VariantResult& v) { return v.trained ? fmt(v.final_loss) : "FAILED"; });
  for (const auto& c : metrics) {
    add_row(c, [&](const VariantResult& v) {
      auto it = v.metrics.find(c);
      return it == v.metrics.end() ? std::string("FAILED") : fmt(it->second);
    });
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream s;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s << "  ";
      s << (i == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[i])) << r[i];
    }
    s << '\n';
  }
  return s.str();
}

}  // namespace chdzdt::eval
