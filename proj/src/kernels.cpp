#include "rclust/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rclust/error.hpp"

namespace rclust::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

std::vector<double> row_norms(const FeatureStream& x) {
  std::vector<double> norms(x.length());
  for (std::size_t i = 0; i < x.length(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  return norms;
}

void check_cosine_rows(const FeatureStream& x, const std::vector<double>& norms) {
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] == 0.0)
      throw Error(ErrorKind::Data, "zero-norm feature vector at frame " + x.ids()[i]);
  }
}

inline double pair_distance(const FeatureStream& x, const std::vector<double>& norms,
                            std::size_t i, std::size_t j, Metric metric) {
  auto a = x.row(i);
  auto b = x.row(j);
  if (metric == Metric::Cosine) {
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    return 1.0 - dot / (norms[i] * norms[j]);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return metric == Metric::Euclidean ? std::sqrt(s) : s;
}

inline double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

// One mean-shift trajectory from `start`.
void shift_to_mode(const FeatureStream& x, std::span<const double> start, double bandwidth,
                   double tolerance, int max_iter, std::span<double> mode) {
  const std::size_t dim = x.dim();
  const double bw2 = bandwidth * bandwidth;
  std::vector<double> cur(start.begin(), start.end());
  std::vector<double> next(dim);
  for (int it = 0; it < max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.length(); ++i) {
      auto r = x.row(i);
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = r[k] - cur[k];
        d2 += d * d;
      }
      if (d2 <= bw2) {
        for (std::size_t k = 0; k < dim; ++k) next[k] += r[k];
        ++count;
      }
    }
    if (count == 0) break;
    double shift2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      next[k] /= static_cast<double>(count);
      double d = next[k] - cur[k];
      shift2 += d * d;
    }
    cur.swap(next);
    if (std::sqrt(shift2) < tolerance) break;
  }
  std::copy(cur.begin(), cur.end(), mode.begin());
}

}  // namespace

double split_log_term(const SplitScan& scan) {
  const double k = static_cast<double>(scan.dim);
  const double arg = 4.0 * static_cast<double>(scan.len) / (k * scan.delta);
  if (!(arg > 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(arg);
}

namespace {

struct SplitTerms {
  double stat = 0.0;   // ||mean(W0) - mean(W1)||_p^p
  double bound = 0.0;  // eps_cut^p
};

SplitTerms split_terms(const SplitScan& scan, std::size_t s, double log_term) {
  const std::size_t dim = scan.dim;
  const double n0 = static_cast<double>(s);
  const double n1 = static_cast<double>(scan.len - s);
  const double* p0 = scan.prefix;
  const double* ps = scan.prefix + s * dim;
  const double* pl = scan.prefix + scan.len * dim;
  SplitTerms t;
  // 1/(2m) = (n0 + n1) / (4 n0 n1)
  const double half = log_term * (n0 + n1) / (4.0 * n0 * n1);
  if (scan.p_norm == 2) {
    for (std::size_t j = 0; j < dim; ++j) {
      double d = (ps[j] - p0[j]) / n0 - (pl[j] - ps[j]) / n1;
      t.stat += d * d;
    }
    t.bound = static_cast<double>(dim) * half;
    return t;
  }
  for (std::size_t j = 0; j < dim; ++j) {
    double d = (ps[j] - p0[j]) / n0 - (pl[j] - ps[j]) / n1;
    t.stat += ipow(std::abs(d), scan.p_norm);
  }
  t.bound = static_cast<double>(dim) * std::pow(half, 0.5 * scan.p_norm);
  return t;
}

}  // namespace

double split_margin(const SplitScan& scan, std::size_t s, double log_term) {
  if (std::isnan(log_term)) return -1.0;
  auto t = split_terms(scan, s, log_term);
  return t.stat - t.bound;
}

// ---------------------------------------------------------------------------

namespace serial {

std::vector<double> distance_matrix(const FeatureStream& x, Metric metric) {
  const std::size_t n = x.length();
  auto norms = row_norms(x);
  if (metric == Metric::Cosine) check_cosine_rows(x, norms);
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = pair_distance(x, norms, i, j, metric);
      d[i * n + j] = v;
      d[j * n + i] = v;
    }
  }
  return d;
}

std::optional<std::size_t> first_firing_split(const SplitScan& scan) {
  if (scan.len < 2 * scan.min_subwindow) return std::nullopt;
  const double log_term = split_log_term(scan);
  for (std::size_t s = scan.min_subwindow; s + scan.min_subwindow <= scan.len; ++s) {
    if (split_margin(scan, s, log_term) > 0.0) return s;
  }
  return std::nullopt;
}

std::vector<double> meanshift_modes(const FeatureStream& x, double bandwidth,
                                    double tolerance, int max_iter) {
  std::vector<double> modes(x.values().size());
  for (std::size_t i = 0; i < x.length(); ++i) {
    shift_to_mode(x, x.row(i), bandwidth, tolerance, max_iter,
                  std::span<double>(modes.data() + i * x.dim(), x.dim()));
  }
  return modes;
}

}  // namespace serial

namespace omp {

std::vector<double> distance_matrix(const FeatureStream& x, Metric metric) {
  const auto n = static_cast<std::ptrdiff_t>(x.length());
  auto norms = row_norms(x);
  if (metric == Metric::Cosine) check_cosine_rows(x, norms);
  std::vector<double> d(x.length() * x.length(), 0.0);
  // Each row i fills its upper part and mirrors it; writes never collide.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      double v = pair_distance(x, norms, static_cast<std::size_t>(i),
                               static_cast<std::size_t>(j), metric);
      d[static_cast<std::size_t>(i * n + j)] = v;
      d[static_cast<std::size_t>(j * n + i)] = v;
    }
  }
  return d;
}

std::optional<std::size_t> first_firing_split(const SplitScan& scan) {
  if (scan.len < 2 * scan.min_subwindow) return std::nullopt;
  const double log_term = split_log_term(scan);
  const auto lo = static_cast<std::ptrdiff_t>(scan.min_subwindow);
  const auto hi = static_cast<std::ptrdiff_t>(scan.len - scan.min_subwindow);
  std::size_t best = std::numeric_limits<std::size_t>::max();
#pragma omp parallel for reduction(min : best) schedule(static) if (hi - lo > 4096)
  for (std::ptrdiff_t s = lo; s <= hi; ++s) {
    if (static_cast<std::size_t>(s) < best &&
        split_margin(scan, static_cast<std::size_t>(s), log_term) > 0.0) {
      best = static_cast<std::size_t>(s);
    }
  }
  if (best == std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return best;
}

std::vector<double> meanshift_modes(const FeatureStream& x, double bandwidth,
                                    double tolerance, int max_iter) {
  std::vector<double> modes(x.values().size());
  const auto n = static_cast<std::ptrdiff_t>(x.length());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto row = x.row(static_cast<std::size_t>(i));
    shift_to_mode(x, row, bandwidth, tolerance, max_iter,
                  std::span<double>(modes.data() + static_cast<std::size_t>(i) * x.dim(), x.dim()));
  }
  return modes;
}

}  // namespace omp

}  // namespace rclust::kernels
