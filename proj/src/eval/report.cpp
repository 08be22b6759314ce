#include "chdzdt/eval/report.hpp"

#include <iomanip>
#include <sstream>
#include <utility>
#include <vector>

namespace chdzdt::eval {

using nlohmann::json;

json to_json(const Prf& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

json to_json(const ClusterReport& r) {
  return {{"n_clusters", r.n_clusters}, {"n_members", r.n_members},   {"acs", r.acs},
          {"aed", r.aed},               {"silhouette", r.silhouette}, {"ari", r.ari},
          {"negative_cosines", r.negative_cosines}};
}

json to_json(const CorrelationReport& r) {
  return {{"n", r.n}, {"pearson", r.pearson}, {"spearman", r.spearman}, {"kendall", r.kendall}};
}

json to_json(const NoiseReport& r) {
  json modes = json::array();
  for (const auto& m : r.modes) modes.push_back({{"mode", to_string(m.mode)}, {"n", m.n}, {"acs", m.acs}});
  json out = {{"tuples", modes}};
  if (r.has_variants) out["variants"] = to_json(r.variants);
  return out;
}

json to_json(const ProbeReport& r) {
  json affixes = json::array();
  for (const auto& a : r.affixes) {
    json o = {{"affix", a.affix},
              {"train_support", a.train_support},
              {"test_support", a.test_support},
              {"excluded", a.excluded}};
    if (!a.excluded) o.update(to_json(a.prf));
    affixes.push_back(std::move(o));
  }
  return {{"n_train", r.n_train}, {"n_test", r.n_test}, {"macro", to_json(r.macro)},
          {"affixes", affixes},   {"warnings", r.warnings}};
}

json to_json(const TrainingTrace& t) {
  return {{"epochs", t.epoch_loss.size()}, {"early_stopped", t.early_stopped}, {"epoch_loss", t.epoch_loss}};
}

namespace {

json classes_json(const std::vector<ClassScore>& scores) {
  json out = json::array();
  for (const auto& c : scores) {
    json o = {{"label", c.label}, {"support", c.support}};
    o.update(to_json(c.prf));
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace

json to_json(const MorphReport& r) {
  json feats = json::array();
  for (const auto& f : r.features) {
    feats.push_back({{"feature", f.feature},
                     {"n_classes", f.n_classes},
                     {"binary", f.binary},
                     {"accuracy", f.accuracy},
                     {"majority_rate", f.majority_rate}});
  }
  return {{"overall", r.overall}, {"features", feats},          {"n_train", r.n_train},
          {"n_test", r.n_test},   {"training", to_json(r.trace)}, {"warnings", r.warnings}};
}

json to_json(const PosReport& r) {
  return {{"accuracy", r.accuracy},
          {"tags", classes_json(r.tags)},
          {"n_train_tokens", r.n_train_tokens},
          {"n_test_tokens", r.n_test_tokens},
          {"training", to_json(r.trace)},
          {"warnings", r.warnings}};
}

json to_json(const SentimentReport& r) {
  return {{"accuracy", r.accuracy},
          {"classes", classes_json(r.classes)},
          {"train_distribution", r.train_distribution},
          {"test_distribution", r.test_distribution},
          {"n_train_words", r.n_train_words},
          {"n_test_words", r.n_test_words},
          {"training", to_json(r.trace)},
          {"warnings", r.warnings}};
}

json to_json(const CompositionModel& m, const ComposeEval& e, bool include_matrix) {
  json out = {{"kind", to_string(m.kind)}, {"dim", m.dim}, {"n", e.n},
              {"skipped", e.skipped},      {"acs", e.acs}, {"aed", e.aed}};
  if (m.kind == CompositionKind::kWAdd || m.kind == CompositionKind::kWMul) {
    out["alpha"] = m.alpha;
    out["beta"] = m.beta;
    out["gamma"] = m.gamma;
  }
  if (m.kind == CompositionKind::kWMul) out["shift"] = m.shift;
  if (m.kind == CompositionKind::kMpCnc) {
    out["frobenius"] = {{"W_p", e.frobenius.at(0)}, {"W_r", e.frobenius.at(1)}, {"W_s", e.frobenius.at(2)}};
  } else if (m.kind == CompositionKind::kMpAdd) {
    out["frobenius"] = {{"W", e.frobenius.at(0)}};
  }
  if (include_matrix && m.w.rows > 0) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.w.rows; ++i) {
      rows.push_back(std::vector<double>(m.w.row(i).begin(), m.w.row(i).end()));
    }
    out["W"] = rows;
  }
  if (!e.warnings.empty()) out["warnings"] = e.warnings;
  return out;
}

namespace {

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  auto key = [&](const std::string& k) { return prefix.empty() ? k : prefix + "." + k; };
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, key(k), out);
  } else if (j.is_array()) {
    // Long numeric arrays (loss curves, matrices) are summarized.
    if (!j.empty() && !j.front().is_object()) {
      if (j.size() <= 8 && !j.front().is_array()) {
        std::string s;
        for (const auto& v : j) s += (s.empty() ? "" : " ") + (v.is_string() ? v.get<std::string>() : v.dump());
        out.emplace_back(prefix, s);
      } else {
        out.emplace_back(prefix, "[" + std::to_string(j.size()) + " entries]");
      }
      return;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      std::string name = std::to_string(i);
      for (const char* k : {"label", "feature", "affix", "mode", "kind", "name"}) {
        if (j[i].contains(k) && j[i][k].is_string()) {
          name = j[i][k].get<std::string>();
          break;
        }
      }
      flatten(j[i], prefix + "[" + name + "]", out);
    }
  } else if (j.is_number_float()) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << j.get<double>();
    out.emplace_back(prefix, s.str());
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

}  // namespace

std::string format_table(const json& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(report, "", rows);
  std::size_t width = 0;
  for (const auto& [k, _] : rows) width = std::max(width, k.size());
  std::ostringstream s;
  for (const auto& [k, v] : rows) s << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << '\n';
  return s.str();
}

}  // namespace chdzdt::eval
