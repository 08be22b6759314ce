#include "chdzdt/eval/probe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "chdzdt/error.hpp"
#include "chdzdt/random.hpp"

namespace chdzdt::eval {

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r;
  const double t = static_cast<double>(tp);
  if (tp + fp > 0) r.precision = t / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = t / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Split stratified_split(const std::vector<std::vector<std::size_t>>& labels, std::size_t n_labels,
                       double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("split fraction must be in (0, 1)");
  const std::size_t n = labels.size();
  Rng rng(seed);
  const double share[2] = {fraction, 1 - fraction};
  double demand[2] = {fraction * static_cast<double>(n), (1 - fraction) * static_cast<double>(n)};
  std::vector<std::size_t> count(n_labels, 0);
  for (const auto& row : labels) {
    for (std::size_t l : row) {
      if (l >= n_labels) throw IndexError("label index " + std::to_string(l) + " out of range");
      ++count[l];
    }
  }
  std::vector<std::array<double, 2>> label_demand(n_labels);
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (int s = 0; s < 2; ++s) label_demand[l][s] = share[s] * static_cast<double>(count[l]);
  }

  std::vector<int> subset(n, -1);
  std::vector<std::size_t> remaining = count;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  auto place = [&](std::size_t i, int s) {
    subset[i] = s;
    demand[s] -= 1;
    for (std::size_t l : labels[i]) {
      label_demand[l][s] -= 1;
      --remaining[l];
    }
  };
  auto choose = [&](const std::array<double, 2>& by_label) {
    if (by_label[0] != by_label[1]) return by_label[0] > by_label[1] ? 0 : 1;
    if (demand[0] != demand[1]) return demand[0] > demand[1] ? 0 : 1;
    return static_cast<int>(uniform_index(rng, 2));
  };

  while (true) {
    std::size_t rarest = n_labels;
    for (std::size_t l = 0; l < n_labels; ++l) {
      if (remaining[l] > 0 && (rarest == n_labels || remaining[l] < remaining[rarest])) rarest = l;
    }
    if (rarest == n_labels) break;
    for (std::size_t i : order) {
      if (subset[i] != -1) continue;
      if (std::find(labels[i].begin(), labels[i].end(), rarest) == labels[i].end()) continue;
      place(i, choose(label_demand[rarest]));
    }
  }
  for (std::size_t i : order) {
    if (subset[i] == -1) place(i, choose({0.0, 0.0}));
  }

  Split out;
  for (std::size_t i = 0; i < n; ++i) (subset[i] == 0 ? out.train : out.test).push_back(i);
  return out;
}

namespace {

double sigmoid(double z) {
  return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z));
}

}  // namespace

ProbeReport probe_train(const Matrix& features, const std::vector<std::vector<std::uint8_t>>& labels,
                        const std::vector<std::string>& affix_names, const ProbeConfig& config,
                        const Split* split) {
  const std::size_t n = features.rows, d = features.cols, a_count = affix_names.size();
  if (labels.size() != n) throw DimensionError("probe: one label row per feature row required");
  if (a_count == 0) throw InputError("probe: no affixes");
  for (const auto& row : labels) {
    if (row.size() != a_count) throw DimensionError("probe: label row width differs from affix count");
  }

  Split drawn;
  if (!split) {
    std::vector<std::vector<std::size_t>> lists(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < a_count; ++a) {
        if (labels[i][a]) lists[i].push_back(a);
      }
    }
    drawn = stratified_split(lists, a_count, config.train_fraction, config.seed);
    split = &drawn;
  }
  if (split->train.empty() || split->test.empty()) throw InputError("probe: empty train or test split");

  // Standardize with training statistics.
  std::vector<double> mu(d, 0), sd(d, 0);
  for (std::size_t i : split->train) {
    for (std::size_t j = 0; j < d; ++j) mu[j] += features.row(i)[j];
  }
  for (auto& m : mu) m /= static_cast<double>(split->train.size());
  for (std::size_t i : split->train) {
    for (std::size_t j = 0; j < d; ++j) {
      const double t = features.row(i)[j] - mu[j];
      sd[j] += t * t;
    }
  }
  for (auto& s : sd) {
    s = std::sqrt(s / static_cast<double>(split->train.size()));
    if (s == 0) s = 1;
  }
  auto standardized = [&](const std::vector<std::size_t>& rows) {
    Matrix m(rows.size(), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) m.row(r)[j] = (features.row(rows[r])[j] - mu[j]) / sd[j];
    }
    return m;
  };
  const Matrix xtr = standardized(split->train), xte = standardized(split->test);

  ProbeReport report;
  report.n_train = split->train.size();
  report.n_test = split->test.size();
  Prf sum;
  std::size_t included = 0;
  std::vector<double> w(d), grad(d);
  for (std::size_t a = 0; a < a_count; ++a) {
    AffixScore score;
    score.affix = affix_names[a];
    for (std::size_t i : split->train) score.train_support += labels[i][a];
    for (std::size_t i : split->test) score.test_support += labels[i][a];
    if (score.train_support == 0) {
      score.excluded = true;
      report.warnings.push_back("affix '" + affix_names[a] +
                                "' is absent from the training split; excluded from the macro average");
      report.affixes.push_back(score);
      continue;
    }
    std::fill(w.begin(), w.end(), 0.0);
    double b = 0;
    const double inv_n = 1.0 / static_cast<double>(xtr.rows);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double gb = 0;
      for (std::size_t r = 0; r < xtr.rows; ++r) {
        const auto x = xtr.row(r);
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
        const double err = sigmoid(z) - labels[split->train[r]][a];
        for (std::size_t j = 0; j < d; ++j) grad[j] += err * x[j];
        gb += err;
      }
      for (std::size_t j = 0; j < d; ++j) w[j] -= config.lr * grad[j] * inv_n;
      b -= config.lr * gb * inv_n;
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t r = 0; r < xte.rows; ++r) {
      const auto x = xte.row(r);
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      const bool pred = sigmoid(z) >= config.threshold;
      const bool gold = labels[split->test[r]][a] != 0;
      tp += pred && gold;
      fp += pred && !gold;
      fn += !pred && gold;
    }
    score.prf = prf_from_counts(tp, fp, fn);
    sum.precision += score.prf.precision;
    sum.recall += score.prf.recall;
    sum.f1 += score.prf.f1;
    ++included;
    report.affixes.push_back(score);
  }
  if (included == 0) throw InputError("probe: no affix occurs in the training split");
  const double k = static_cast<double>(included);
  report.macro = {sum.precision / k, sum.recall / k, sum.f1 / k};
  return report;
}

ProbeReport probe_affixes(const Embedder& embedder, const std::vector<AffixRow>& rows,
                          const ProbeConfig& config) {
  if (rows.empty()) throw InputError("probe: no rows");
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    for (const auto& a : r.affixes) index.emplace(a, 0);
  }
  std::vector<std::string> names;
  for (auto& [name, i] : index) {
    i = names.size();
    names.push_back(name);
  }
  std::vector<std::string> words;
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& r : rows) {
    words.push_back(r.word);
    std::vector<std::uint8_t> row(names.size(), 0);
    for (const auto& a : r.affixes) row[index.at(a)] = 1;
    labels.push_back(std::move(row));
  }
  return probe_train(embedder.embed_all(words), labels, names, config);
}

}  // namespace chdzdt::eval
