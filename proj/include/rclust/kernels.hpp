#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// rclust::kernels::serial and an OpenMP version in rclust::kernels::omp that
// must produce identical results; tests and the benchmark compare the two.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rclust/stream.hpp"

namespace rclust::kernels {

enum class Backend { Serial, OpenMP };

enum class Metric { Cosine, Euclidean, SqEuclidean };

/// Inputs for scanning every split of an ADWIN window. `prefix` holds
/// len + 1 rows of `dim` cumulative sums; row 0 is the sum before the window.
struct SplitScan {
  const double* prefix = nullptr;
  std::size_t dim = 0;
  std::size_t len = 0;
  int p_norm = 2;
  double delta = 0.05;
  std::size_t min_subwindow = 5;
};

/// Squared-free form of the cut test for split s (|W0| = s): returns
/// ||mean(W0) - mean(W1)||_p^p - eps_cut^p, positive iff the split fires.
/// Splits where the bound is undefined (k delta' >= 4) never fire.
double split_margin(const SplitScan& scan, std::size_t s, double log_term);

/// ln(4 |W| / (k delta)) for the window in `scan`; NaN when undefined.
double split_log_term(const SplitScan& scan);

/// Number of worker threads the OpenMP kernels will use.
int max_threads();

namespace serial {

/// Full symmetric T x T matrix, row-major, zero diagonal.
std::vector<double> distance_matrix(const FeatureStream& x, Metric metric);

/// Smallest s with min_subwindow <= s <= len - min_subwindow whose cut test fires.
std::optional<std::size_t> first_firing_split(const SplitScan& scan);

/// Flat-kernel mean shift: the mode reached from every frame.
std::vector<double> meanshift_modes(const FeatureStream& x, double bandwidth,
                                    double tolerance, int max_iter);

}  // namespace serial

namespace omp {

std::vector<double> distance_matrix(const FeatureStream& x, Metric metric);
std::optional<std::size_t> first_firing_split(const SplitScan& scan);
std::vector<double> meanshift_modes(const FeatureStream& x, double bandwidth,
                                    double tolerance, int max_iter);

}  // namespace omp

inline std::vector<double> distance_matrix(const FeatureStream& x, Metric metric,
                                           Backend backend = Backend::OpenMP) {
  return backend == Backend::Serial ? serial::distance_matrix(x, metric)
                                    : omp::distance_matrix(x, metric);
}

inline std::optional<std::size_t> first_firing_split(const SplitScan& scan,
                                                     Backend backend = Backend::Serial) {
  return backend == Backend::Serial ? serial::first_firing_split(scan)
                                    : omp::first_firing_split(scan);
}

inline std::vector<double> meanshift_modes(const FeatureStream& x, double bandwidth,
                                           double tolerance, int max_iter,
                                           Backend backend = Backend::OpenMP) {
  return backend == Backend::Serial ? serial::meanshift_modes(x, bandwidth, tolerance, max_iter)
                                    : omp::meanshift_modes(x, bandwidth, tolerance, max_iter);
}

}  // namespace rclust::kernels
