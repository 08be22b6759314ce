#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chdzdt/eval/datasets.hpp"
#include "chdzdt/eval/embedder.hpp"

namespace chdzdt::eval {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double euclidean(std::span<const double> a, std::span<const double> b);
// Throws InputError when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

// Mean cosine between each member and its root, over all members of all
// clusters. Raw cosines, so the result lies in [-1, 1].
double acs(const Embedder& embedder, const std::vector<Cluster>& clusters);
// Mean member-root Euclidean distance divided by sqrt(d).
double aed(const Embedder& embedder, const std::vector<Cluster>& clusters);

// Mean silhouette with Euclidean distance. Points in singleton clusters score
// 0, as does a point with a = b = 0. Needs at least two distinct labels.
double silhouette(const Matrix& points, std::span<const int> labels);

struct KMeansConfig {
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // relative inertia change
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;
  double inertia = 0;
  std::size_t iterations = 0;  // of the winning restart
};

// Lloyd iterations from k-means++ seeds; best inertia over n_init restarts.
// A centroid left empty is moved onto the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& config = {});

// Hubert-Arabie adjusted Rand index. Two partitions whose expected and
// maximum index coincide (both trivial) score 1.
double ari(std::span<const int> pred, std::span<const int> gold);

// Each throws InputError when a score vector has zero variance or the
// lengths differ.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
// tau = 2/(n(n-1)) * sum_{i<j} sign(x_i - x_j) sign(y_i - y_j); tied pairs add 0.
double kendall(std::span<const double> x, std::span<const double> y);

// Average ranks, 1-based; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

struct ClusterReport {
  std::size_t n_clusters = 0;
  std::size_t n_members = 0;
  double acs = 0;
  double aed = 0;
  double silhouette = 0;
  double ari = 0;
  // Member-root pairs with negative cosine (kept, not clipped).
  std::size_t negative_cosines = 0;
};

// ACS and AED over member-root pairs; silhouette and k-means ARI over every
// root and member labeled by its cluster, with k = number of clusters.
ClusterReport cluster_report(const Embedder& embedder, const std::vector<Cluster>& clusters,
                             std::uint64_t seed, const KMeansConfig& kmeans_config = {});

struct CorrelationReport {
  std::size_t n = 0;
  double pearson = 0;
  double spearman = 0;
  double kendall = 0;
};

// Cosine per pair against the human scores. Needs at least 3 pairs.
CorrelationReport similarity_corr(const Embedder& embedder, const std::vector<SimilarityPair>& pairs);

}  // namespace chdzdt::eval
