#include "rclust/adwin.hpp"

#include <cmath>
#include <string>

#include "rclust/error.hpp"

namespace rclust {

void AdwinConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Usage, "delta must be in (0, 1)");
  if (p_norm < 1) throw Error(ErrorKind::Usage, "p-norm must be >= 1");
  if (min_subwindow < 1) throw Error(ErrorKind::Usage, "min-subwindow must be >= 1");
  if (max_window && *max_window < 2 * min_subwindow)
    throw Error(ErrorKind::Usage, "max-window must hold two minimal subwindows");
}

double epsilon_cut(std::size_t k, int p, std::size_t n0, std::size_t n1, double delta) {
  if (k < 1 || p < 1 || n0 < 1 || n1 < 1 || !(delta > 0.0 && delta < 1.0))
    throw Error(ErrorKind::Usage, "epsilon_cut: invalid arguments");
  const double n = static_cast<double>(n0 + n1);
  const double delta_prime = delta / n;
  const double kd = static_cast<double>(k) * delta_prime;
  if (kd >= 4.0) {
    throw Error(ErrorKind::Compute, "epsilon_cut undefined: k*delta' = " + std::to_string(kd) +
                                        " >= 4 for window " + std::to_string(n0 + n1));
  }
  const double m = 2.0 * static_cast<double>(n0) * static_cast<double>(n1) / n;
  return std::pow(static_cast<double>(k), 1.0 / p) * std::sqrt(std::log(4.0 / kd) / (2.0 * m));
}

AdwinDetector::AdwinDetector(std::size_t dim, AdwinConfig cfg)
    : cfg_(std::move(cfg)),
      input_dim_(dim),
      stat_dim_(cfg_.statistic == AdwinStatistic::NormMean ? 1 : dim) {
  if (dim == 0) throw Error(ErrorKind::Usage, "ADWIN needs dimension >= 1");
  cfg_.validate();
  prefix_.assign(stat_dim_, 0.0);
}

std::span<const double> AdwinDetector::sample(std::size_t i) const {
  return {samples_.data() + (begin_ + i) * stat_dim_, stat_dim_};
}

std::vector<double> AdwinDetector::window_mean(std::size_t first, std::size_t last) const {
  std::vector<double> mean(stat_dim_, 0.0);
  if (last <= first) return mean;
  const double* a = prefix_.data() + (begin_ + first) * stat_dim_;
  const double* b = prefix_.data() + (begin_ + last) * stat_dim_;
  for (std::size_t j = 0; j < stat_dim_; ++j)
    mean[j] = (b[j] - a[j]) / static_cast<double>(last - first);
  return mean;
}

void AdwinDetector::drop_front(std::size_t count) {
  begin_ += count;
  if (begin_ > 1024 && begin_ * 2 > end_) compact();
}

// Rebuilds storage from retained samples so memory tracks the window size.
void AdwinDetector::compact() {
  const std::size_t len = end_ - begin_;
  std::vector<double> kept(samples_.begin() + static_cast<std::ptrdiff_t>(begin_ * stat_dim_),
                           samples_.begin() + static_cast<std::ptrdiff_t>(end_ * stat_dim_));
  samples_ = std::move(kept);
  prefix_.assign((len + 1) * stat_dim_, 0.0);
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < stat_dim_; ++j)
      prefix_[(i + 1) * stat_dim_ + j] = prefix_[i * stat_dim_ + j] + samples_[i * stat_dim_ + j];
  offset_ += begin_;
  begin_ = 0;
  end_ = len;
}

AdwinUpdate AdwinDetector::update(std::span<const double> x) {
  if (x.size() != input_dim_) {
    throw Error(ErrorKind::Data, "ADWIN sample dimension " + std::to_string(x.size()) +
                                     " != stream dimension " + std::to_string(input_dim_));
  }
  if (cfg_.statistic == AdwinStatistic::NormMean) {
    double acc = 0.0;
    for (double v : x) acc += std::pow(std::abs(v), cfg_.p_norm);
    samples_.push_back(std::pow(acc, 1.0 / cfg_.p_norm));
  } else {
    samples_.insert(samples_.end(), x.begin(), x.end());
  }
  const std::size_t base = end_ * stat_dim_;
  prefix_.resize(base + 2 * stat_dim_);
  for (std::size_t j = 0; j < stat_dim_; ++j)
    prefix_[base + stat_dim_ + j] = prefix_[base + j] + samples_[base + j];
  ++end_;

  AdwinUpdate result;
  while (true) {
    kernels::SplitScan scan;
    scan.prefix = prefix_.data() + begin_ * stat_dim_;
    scan.dim = stat_dim_;
    scan.len = end_ - begin_;
    scan.p_norm = cfg_.p_norm;
    scan.delta = cfg_.delta;
    scan.min_subwindow = cfg_.min_subwindow;
    auto split = kernels::first_firing_split(scan, cfg_.backend);
    if (!split) break;
    result.change_detected = true;
    result.drop_count += *split;
    drop_front(*split);
  }
  if (cfg_.max_window && window_length() > *cfg_.max_window) {
    std::size_t excess = window_length() - *cfg_.max_window;
    result.drop_count += excess;
    drop_front(excess);
  }
  return result;
}

Segmentation detect_boundaries(const FeatureStream& stream, const AdwinConfig& cfg) {
  AdwinDetector detector(stream.dim(), cfg);
  std::vector<std::size_t> boundaries{0};
  for (std::size_t t = 0; t < stream.length(); ++t) {
    auto up = detector.update(stream.row(t));
    if (!up.change_detected) continue;
    const std::size_t start = detector.window_start();
    if (start <= boundaries.back()) continue;
    // A run no longer than one subwindow was never tested on its own: the
    // detection only flushed samples left over from the previous cut.
    if (boundaries.size() > 1 && start - boundaries.back() <= cfg.min_subwindow)
      boundaries.back() = start;
    else
      boundaries.push_back(start);
  }
  return Segmentation(std::move(boundaries), stream.length(), SegSource::Adwin);
}

}  // namespace rclust
