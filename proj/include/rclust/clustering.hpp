#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rclust/kernels.hpp"
#include "rclust/stream.hpp"

namespace rclust {

enum class Linkage { Single, Centroid, Average, Weighted, Complete, Ward, Median };

inline constexpr Linkage kAllLinkages[] = {Linkage::Single,   Linkage::Centroid, Linkage::Average,
                                           Linkage::Weighted, Linkage::Complete, Linkage::Ward,
                                           Linkage::Median};

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view text);

using kernels::Metric;
Metric parse_metric(std::string_view text);
std::string_view to_string(Metric metric);

/// True for linkages whose merge heights never decrease.
bool is_monotone(Linkage linkage);

struct AcConfig {
  Linkage linkage = Linkage::Average;
  Metric metric = Metric::Cosine;
  double cut = 0.3;
  kernels::Backend backend = kernels::Backend::OpenMP;

  void validate() const;
};

/// One agglomeration step. Ids follow the usual convention: leaves are
/// 0..T-1 and the cluster created by merge s has id T + s. a < b.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t num_leaves = 0;
  std::vector<Merge> merges;  // num_leaves - 1 entries
};

/// d(i, j) = 1 - cos(x_i, x_j). Throws ErrorKind::Data on a zero-norm row.
std::vector<double> cosine_distance_matrix(const FeatureStream& x,
                                           kernels::Backend backend = kernels::Backend::OpenMP);

/// Lance-Williams agglomeration. Among equal-distance pairs the one with the
/// smallest (min frame index, max frame index) is merged first, where a
/// cluster's frame index is its smallest member. Centroid, median and Ward
/// run on squared euclidean geometry (rows are l2-normalized first when the
/// cosine metric is requested) and report the square root as the height.
Dendrogram linkage(const FeatureStream& x, const AcConfig& cfg);

/// Agglomeration over a precomputed full n x n dissimilarity matrix. For
/// centroid/median/ward the matrix must hold squared euclidean distances.
Dendrogram linkage_from_matrix(std::vector<double> dist, std::size_t n, Linkage method);

/// Flat clusters: connected components of the merges with height <= cut.
/// Labels are numbered by first appearance.
std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendro, double cut);

/// Maximal runs of identical labels become segments.
Segmentation labels_to_segments(std::span<const std::size_t> labels, SegSource source);

/// AC segmentation: linkage, cut, temporalization.
Segmentation ac_segment(const FeatureStream& x, const AcConfig& cfg);

struct BaselineConfig {
  std::size_t kmeans_k = 5;
  std::uint64_t kmeans_seed = 0;
  int kmeans_max_iter = 300;
  double meanshift_bandwidth = 1.0;
  double meanshift_tolerance = 1e-5;
  int meanshift_max_iter = 200;
  kernels::Backend backend = kernels::Backend::OpenMP;
};

/// Lloyd iterations from a seeded k-means++ start.
std::vector<std::size_t> kmeans(const FeatureStream& x, const BaselineConfig& cfg);

/// Flat-kernel mean shift; modes closer than bandwidth/2 share a label.
std::vector<std::size_t> meanshift(const FeatureStream& x, const BaselineConfig& cfg);

/// Renumbers labels in order of first appearance.
std::vector<std::size_t> canonical_labels(std::span<const std::size_t> labels);

}  // namespace rclust
