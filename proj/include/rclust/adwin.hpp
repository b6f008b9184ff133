#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rclust/kernels.hpp"
#include "rclust/stream.hpp"

namespace rclust {

/// What the detector compares across subwindows.
enum class AdwinStatistic {
  MeanVector,  // per-dimension means, p-norm of their difference
  NormMean,    // scalar stream of per-sample p-norms (k = 1)
};

struct AdwinConfig {
  double delta = 0.05;
  int p_norm = 2;
  std::size_t min_subwindow = 5;
  std::optional<std::size_t> max_window;
  AdwinStatistic statistic = AdwinStatistic::MeanVector;
  kernels::Backend backend = kernels::Backend::Serial;

  void validate() const;
};

/// Hoeffding-style threshold for a k-dimensional mean difference:
///   k^(1/p) * sqrt( 1/(2m) * ln(4 / (k delta')) ),
/// with delta' = delta / (n0 + n1) and m the harmonic mean of n0 and n1.
/// Throws ErrorKind::Compute when k delta' >= 4.
double epsilon_cut(std::size_t k, int p, std::size_t n0, std::size_t n1, double delta);

struct AdwinUpdate {
  bool change_detected = false;
  std::size_t drop_count = 0;
};

/// Exact ADWIN over a multivariate stream: every retained sample is kept and
/// every admissible split is tested on each update.
class AdwinDetector {
 public:
  AdwinDetector(std::size_t dim, AdwinConfig cfg = {});

  AdwinUpdate update(std::span<const double> x);

  /// Statistic dimension k (1 for NormMean).
  std::size_t stat_dim() const noexcept { return stat_dim_; }
  std::size_t window_length() const noexcept { return end_ - begin_; }
  /// Samples consumed so far.
  std::size_t position() const noexcept { return offset_ + end_; }
  /// Stream index of the oldest retained sample.
  std::size_t window_start() const noexcept { return offset_ + begin_; }

  /// Incrementally maintained mean over window samples [first, last).
  std::vector<double> window_mean(std::size_t first, std::size_t last) const;
  /// Retained sample `i` (0 = oldest) as seen by the statistic.
  std::span<const double> sample(std::size_t i) const;

  const AdwinConfig& config() const noexcept { return cfg_; }

 private:
  void drop_front(std::size_t count);
  void compact();

  AdwinConfig cfg_;
  std::size_t input_dim_;
  std::size_t stat_dim_;
  std::vector<double> samples_;  // stored rows [0, end_)
  std::vector<double> prefix_;   // (end_ + 1) rows of running sums
  std::size_t begin_ = 0;        // first retained row in storage
  std::size_t end_ = 0;
  std::size_t offset_ = 0;       // stream index of storage row 0
};

/// Feeds frames in order; every update that detects a change emits a
/// boundary at the start of the retained window. A boundary at most
/// min_subwindow frames after the previous one replaces it.
Segmentation detect_boundaries(const FeatureStream& stream, const AdwinConfig& cfg);

}  // namespace rclust
