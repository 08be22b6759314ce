#include "chdzdt/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "chdzdt/error.hpp"
#include "chdzdt/random.hpp"

namespace chdzdt::eval {

namespace {

void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Distinct words of the clusters, embedded once.
struct EmbeddedClusters {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::size_t> index;
  Matrix vectors;

  std::span<const double> operator[](const std::string& w) const { return vectors.row(index.at(w)); }
};

EmbeddedClusters embed_clusters(const Embedder& embedder, const std::vector<Cluster>& clusters) {
  if (clusters.empty()) throw InputError("no clusters to evaluate");
  EmbeddedClusters e;
  auto add = [&](const std::string& w) {
    if (e.index.emplace(w, e.words.size()).second) e.words.push_back(w);
  };
  for (const auto& c : clusters) {
    if (c.members.empty()) throw InputError("cluster '" + c.root + "' has no members");
    add(c.root);
    for (const auto& m : c.members) add(m);
  }
  e.vectors = embedder.embed_all(e.words);
  if (e.vectors.cols != embedder.dim() || e.vectors.rows != e.words.size()) {
    throw DimensionError("embedder " + embedder.name() + " returned a matrix of the wrong shape");
  }
  return e;
}

double cosine_named(const EmbeddedClusters& e, const std::string& a, const std::string& b) {
  const auto va = e[a], vb = e[b];
  const double na = norm(va), nb = norm(vb);
  if (na == 0) throw InputError("zero-norm embedding for '" + a + "'");
  if (nb == 0) throw InputError("zero-norm embedding for '" + b + "'");
  return dot(va, vb) / (na * nb);
}

void check_variance(std::span<const double> x, const char* what) {
  if (x.empty() || std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw InputError(std::string(what) + ": undefined correlation, a score vector has zero variance");
  }
}

double sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("euclidean: dimension mismatch");
  return std::sqrt(squared_distance(a, b));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) throw InputError("cosine of a zero-norm vector");
  return dot(a, b) / (na * nb);
}

double acs(const Embedder& embedder, const std::vector<Cluster>& clusters) {
  const auto e = embed_clusters(embedder, clusters);
  double sum = 0;
  std::size_t n = 0;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) {
      sum += cosine_named(e, m, c.root);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double aed(const Embedder& embedder, const std::vector<Cluster>& clusters) {
  const auto e = embed_clusters(embedder, clusters);
  double sum = 0;
  std::size_t n = 0;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) {
      sum += euclidean(e[m], e[c.root]);
      ++n;
    }
  }
  return sum / static_cast<double>(n) / std::sqrt(static_cast<double>(e.vectors.cols));
}

double silhouette(const Matrix& points, std::span<const int> labels) {
  check_same_length(points.rows, labels.size(), "silhouette");
  std::vector<int> ids;
  for (int l : labels) {
    if (std::find(ids.begin(), ids.end(), l) == ids.end()) ids.push_back(l);
  }
  if (ids.size() < 2) throw InputError("silhouette needs at least two clusters");
  std::sort(ids.begin(), ids.end());
  const std::size_t n = points.rows, k = ids.size();
  std::vector<std::size_t> cluster(n), counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin();
    ++counts[cluster[i]];
  }
  double total = 0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[cluster[i]] == 1) continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist_sum[cluster[j]] += euclidean(points.row(i), points.row(j));
    }
    const double a = dist_sum[cluster[i]] / static_cast<double>(counts[cluster[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != cluster[i]) b = std::min(b, dist_sum[c] / static_cast<double>(counts[c]));
    }
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& config) {
  const std::size_t n = points.rows, d = points.cols;
  if (k == 0) throw InputError("kmeans: k must be positive");
  if (k > n) {
    throw InputError("kmeans: k=" + std::to_string(k) + " exceeds the " + std::to_string(n) +
                     " points");
  }
  if (config.n_init == 0 || config.max_iter == 0) throw ConfigError("kmeans: n_init and max_iter must be positive");
  Rng rng(seed);

  auto assign = [&](const Matrix& centroids, std::vector<int>& labels, std::vector<double>& dist) {
    double inertia = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = squared_distance(points.row(i), centroids.row(c));
        if (dd < best) {
          best = dd;
          arg = static_cast<int>(c);
        }
      }
      labels[i] = arg;
      dist[i] = best;
      inertia += best;
    }
    return inertia;
  };

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < config.n_init; ++run) {
    // k-means++ seeding
    Matrix centroids(k, d);
    std::vector<double> closest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = uniform_index(rng, n);
    for (std::size_t c = 0; c < k; ++c) {
      if (c > 0) {
        double total = 0;
        for (double v : closest) total += v;
        if (total > 0) {
          double r = uniform01(rng) * total;
          pick = n - 1;
          for (std::size_t i = 0; i < n; ++i) {
            r -= closest[i];
            if (r < 0) {
              pick = i;
              break;
            }
          }
        } else {
          pick = uniform_index(rng, n);
        }
      }
      std::copy_n(points.row(pick).begin(), d, centroids.row(c).begin());
      for (std::size_t i = 0; i < n; ++i) {
        closest[i] = std::min(closest[i], squared_distance(points.row(i), centroids.row(c)));
      }
    }

    std::vector<int> labels(n);
    std::vector<double> dist(n);
    double inertia = assign(centroids, labels, dist);
    std::size_t it = 1;
    for (; it < config.max_iter; ++it) {
      Matrix sums(k, d);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        auto row = sums.row(labels[i]);
        for (std::size_t j = 0; j < d; ++j) row[j] += points.row(i)[j];
        ++counts[labels[i]];
      }
      std::vector<bool> taken(n, false);
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          for (std::size_t j = 0; j < d; ++j) {
            centroids.row(c)[j] = sums.row(c)[j] / static_cast<double>(counts[c]);
          }
          continue;
        }
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && dist[i] > far_d) {
            far_d = dist[i];
            far = i;
          }
        }
        taken[far] = true;
        dist[far] = 0;
        std::copy_n(points.row(far).begin(), d, centroids.row(c).begin());
      }
      const double next = assign(centroids, labels, dist);
      const double change = std::abs(inertia - next);
      inertia = next;
      if (change <= config.tol * std::max(inertia, std::numeric_limits<double>::min())) break;
    }
    if (inertia < best.inertia) {
      best.labels = labels;
      best.centroids = centroids;
      best.inertia = inertia;
      best.iterations = it;
    }
  }
  return best;
}

double ari(std::span<const int> pred, std::span<const int> gold) {
  check_same_length(pred.size(), gold.size(), "ari");
  const std::size_t n = pred.size();
  if (n < 2) return 1.0;
  std::unordered_map<int, std::size_t> pi, gi;
  for (int l : pred) pi.emplace(l, pi.size());
  for (int l : gold) gi.emplace(l, gi.size());
  std::vector<double> table(pi.size() * gi.size(), 0), a(pi.size(), 0), b(gi.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = pi[pred[i]], g = gi[gold[i]];
    table[p * gi.size() + g] += 1;
    a[p] += 1;
    b[g] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (double v : table) index += c2(v);
  for (double v : a) sa += c2(v);
  for (double v : b) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(n));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_same_length(x.size(), y.size(), "pearson");
  check_variance(x, "pearson");
  check_variance(y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_same_length(x.size(), y.size(), "spearman");
  check_variance(x, "spearman");
  check_variance(y, "spearman");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall(std::span<const double> x, std::span<const double> y) {
  check_same_length(x.size(), y.size(), "kendall");
  check_variance(x, "kendall");
  check_variance(y, "kendall");
  const std::size_t n = x.size();
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
  }
  return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

ClusterReport cluster_report(const Embedder& embedder, const std::vector<Cluster>& clusters,
                             std::uint64_t seed, const KMeansConfig& kmeans_config) {
  const auto e = embed_clusters(embedder, clusters);
  ClusterReport r;
  r.n_clusters = clusters.size();
  double cos_sum = 0, dist_sum = 0;
  std::vector<std::string> point_words;
  std::vector<int> gold;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& c = clusters[ci];
    point_words.push_back(c.root);
    gold.push_back(static_cast<int>(ci));
    for (const auto& m : c.members) {
      const double cs = cosine_named(e, m, c.root);
      cos_sum += cs;
      if (cs < 0) ++r.negative_cosines;
      dist_sum += euclidean(e[m], e[c.root]);
      ++r.n_members;
      point_words.push_back(m);
      gold.push_back(static_cast<int>(ci));
    }
  }
  r.acs = cos_sum / static_cast<double>(r.n_members);
  r.aed = dist_sum / static_cast<double>(r.n_members) / std::sqrt(static_cast<double>(e.vectors.cols));

  Matrix points(point_words.size(), e.vectors.cols);
  for (std::size_t i = 0; i < point_words.size(); ++i) {
    const auto v = e[point_words[i]];
    std::copy(v.begin(), v.end(), points.row(i).begin());
  }
  if (clusters.size() >= 2) r.silhouette = silhouette(points, gold);
  const auto km = kmeans(points, clusters.size(), seed, kmeans_config);
  r.ari = ari(km.labels, gold);
  return r;
}

CorrelationReport similarity_corr(const Embedder& embedder, const std::vector<SimilarityPair>& pairs) {
  if (pairs.size() < 3) throw InputError("similarity correlation needs at least 3 pairs");
  std::vector<std::string> words;
  for (const auto& p : pairs) {
    words.push_back(p.w1);
    words.push_back(p.w2);
  }
  const auto m = embedder.embed_all(words);
  std::vector<double> model(pairs.size()), human(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto a = m.row(2 * i), b = m.row(2 * i + 1);
    if (norm(a) == 0) throw InputError("zero-norm embedding for '" + pairs[i].w1 + "'");
    if (norm(b) == 0) throw InputError("zero-norm embedding for '" + pairs[i].w2 + "'");
    model[i] = cosine(a, b);
    human[i] = pairs[i].score;
  }
  CorrelationReport r;
  r.n = pairs.size();
  r.pearson = pearson(model, human);
  r.spearman = spearman(model, human);
  r.kendall = kendall(model, human);
  return r;
}

}  // namespace chdzdt::eval
