#pragma once

// Naive reference implementations of the clustering metrics, written from
// the definitions and sharing no code with the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double cos_sim(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline double dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct VecCluster {
  Vec root;
  std::vector<Vec> members;
};

inline double acs(const std::vector<VecCluster>& cs) {
  double num = 0, den = 0;
  for (const auto& c : cs) {
    for (const auto& m : c.members) num += cos_sim(m, c.root);
    den += static_cast<double>(c.members.size());
  }
  return num / den;
}

inline double aed(const std::vector<VecCluster>& cs) {
  double num = 0, den = 0;
  std::size_t d = cs.front().root.size();
  for (const auto& c : cs) {
    for (const auto& m : c.members) num += dist(m, c.root);
    den += static_cast<double>(c.members.size());
  }
  return num / den / std::sqrt(static_cast<double>(d));
}

inline double silhouette(const std::vector<Vec>& pts, const std::vector<int>& lab) {
  std::map<int, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < pts.size(); ++i) by[lab[i]].push_back(i);
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& own = by[lab[i]];
    if (own.size() == 1) continue;
    double a = 0;
    for (std::size_t j : own) a += j == i ? 0 : dist(pts[i], pts[j]);
    a /= static_cast<double>(own.size() - 1);
    double b = 1e300;
    for (const auto& [l, members] : by) {
      if (l == lab[i]) continue;
      double s = 0;
      for (std::size_t j : members) s += dist(pts[i], pts[j]);
      b = std::min(b, s / static_cast<double>(members.size()));
    }
    const double m = std::max(a, b);
    total += m == 0 ? 0 : (b - a) / m;
  }
  return total / static_cast<double>(pts.size());
}

// Pair counting over every unordered pair.
inline double ari(const std::vector<int>& x, const std::vector<int>& y) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const bool sx = x[i] == x[j], sy = y[i] == y[j];
      if (sx && sy) a += 1;
      else if (sx) b += 1;
      else if (sy) c += 1;
      else d += 1;
    }
  }
  const double den = (a + b) * (b + d) + (a + c) * (c + d);
  if (den == 0) return 1.0;
  return 2 * (a * d - b * c) / den;
}

// A random instance: up to `max_points` points in up to `max_clusters`
// labeled groups, in 2..8 dimensions.
struct Instance {
  std::vector<Vec> points;
  std::vector<int> labels;
  std::vector<int> other;  // a second random partition
  std::size_t dim = 0;
};

inline Instance random_instance(std::mt19937_64& gen, std::size_t max_points = 50, int max_clusters = 6) {
  Instance inst;
  std::uniform_int_distribution<std::size_t> dim_dist(2, 8);
  std::uniform_int_distribution<int> k_dist(2, max_clusters);
  inst.dim = dim_dist(gen);
  const int k = k_dist(gen);
  std::uniform_int_distribution<std::size_t> n_dist(static_cast<std::size_t>(k) + 1, max_points);
  const std::size_t n = n_dist(gen);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, k - 1);
  std::vector<Vec> centers(static_cast<std::size_t>(k), Vec(inst.dim));
  for (auto& c : centers) {
    for (auto& x : c) x = 3 * nd(gen);
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Every cluster is non-empty: the first k points cover the labels.
    const int l = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : lab(gen);
    Vec p(inst.dim);
    for (std::size_t j = 0; j < inst.dim; ++j) p[j] = centers[static_cast<std::size_t>(l)][j] + nd(gen);
    inst.points.push_back(p);
    inst.labels.push_back(l);
    inst.other.push_back(lab(gen));
  }
  return inst;
}

}  // namespace oracle
