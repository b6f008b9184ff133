#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "rclust/stream.hpp"

namespace rclust {

struct GcConfig {
  double omega1 = 1.0;  // ADWIN vs AC unary trade-off
  double omega2 = 0.5;  // pairwise weight
  std::size_t radius = 1;

  void validate() const;
};

/// Dense frames x labels table of reals.
struct LabelTable {
  std::size_t frames = 0;
  std::size_t labels = 0;
  std::vector<double> values;

  LabelTable() = default;
  LabelTable(std::size_t t, std::size_t l, double fill = 0.0)
      : frames(t), labels(l), values(t * l, fill) {}
  double& operator()(std::size_t i, std::size_t l) { return values[i * labels + l]; }
  double operator()(std::size_t i, std::size_t l) const { return values[i * labels + l]; }
};

/// Unary tables, neighbour similarities and label set of the fused energy.
struct EnergyModel {
  Segmentation candidates;  // one label per candidate segment
  LabelTable u_ac;
  LabelTable u_adw;
  std::size_t radius = 1;
  /// similarity[i * radius + d - 1] = s(i, i + d); 0 past the last frame.
  std::vector<double> similarity;

  std::size_t frames() const { return u_ac.frames; }
  std::size_t num_labels() const { return u_ac.labels; }
  double s(std::size_t i, std::size_t d) const { return similarity[i * radius + d - 1]; }
};

/// A Potts chain energy with explicit per-label unaries and per-pair costs:
///   sum_i unary(i, l_i) + sum_{i, 1<=d<=radius} edge(i, d) [l_i != l_{i+d}].
struct ChainEnergy {
  LabelTable unary;
  std::size_t radius = 1;
  std::vector<double> edge;  // frames * radius, edge[i * radius + d - 1]

  double pair_cost(std::size_t i, std::size_t d) const { return edge[i * radius + d - 1]; }
};

/// Sorted union of both boundary sets.
Segmentation candidate_labels(const Segmentation& seg_ac, const Segmentation& seg_adwin);

/// U(i, l) = clip((1 - cos(x_i, centroid_l)) / 2, 0, 1) when candidate
/// segment l lies inside the method segment holding frame i, otherwise 1.
LabelTable unary_table(const FeatureStream& x, const Segmentation& candidates,
                       const Segmentation& method_seg);

/// max(0, cos(xn_i, xn_n)) on min-max normalized features. Two zero rows
/// count as identical; one zero row as unrelated.
double pairwise_weight(const FeatureStream& xn, std::size_t i, std::size_t n);

EnergyModel build_energy(const FeatureStream& x_unary, const FeatureStream& x_pair,
                         const Segmentation& seg_ac, const Segmentation& seg_adwin,
                         std::size_t radius);

/// Number of frames n != i with |i - n| <= radius.
std::size_t neighbour_count(std::size_t i, std::size_t frames, std::size_t radius);

/// Folds omega1, omega2 and the 1/|N_i| normalization into a ChainEnergy.
ChainEnergy to_chain(const EnergyModel& model, const GcConfig& cfg);

double total_energy(std::span<const std::size_t> labeling, const EnergyModel& model,
                    const GcConfig& cfg);
double chain_energy(std::span<const std::size_t> labeling, const ChainEnergy& chain);

/// Exact minimizer by dynamic programming over the last `radius` labels.
/// Among optimal labelings the lexicographically smallest is returned.
/// Throws ErrorKind::Compute when labels^radius exceeds 1e6 or the value
/// tables would exceed 5e7 entries.
std::vector<std::size_t> solve_chain(const ChainEnergy& chain);
std::vector<std::size_t> solve_chain(const EnergyModel& model, const GcConfig& cfg);

struct RclusterResult {
  Segmentation segmentation;
  std::vector<std::size_t> labels;  // candidate label per frame
  double energy = 0.0;
  EnergyModel model;
};

RclusterResult rcluster_full(const FeatureStream& x_unary, const FeatureStream& x_pair,
                             const Segmentation& seg_ac, const Segmentation& seg_adwin,
                             const GcConfig& cfg);

Segmentation rcluster(const FeatureStream& x_unary, const FeatureStream& x_pair,
                      const Segmentation& seg_ac, const Segmentation& seg_adwin,
                      const GcConfig& cfg);

/// Per-frame chosen unary and per-edge pairwise cost of a solved run.
nlohmann::ordered_json energy_trace(const RclusterResult& result, const GcConfig& cfg);

}  // namespace rclust
