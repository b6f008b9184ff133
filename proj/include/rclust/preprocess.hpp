#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "rclust/stream.hpp"

namespace rclust {

struct PreprocessConfig {
  double alpha = 0.5;
  double variance_fraction = 0.95;
  bool pca = true;

  void validate() const;
};

/// sign(x)|x|^alpha elementwise followed by l2 normalization. The zero vector
/// maps to itself.
std::vector<double> signed_root_l2(std::span<const double> v, double alpha);
FeatureStream signed_root_l2(const FeatureStream& stream, double alpha);

/// Linear projection onto the leading principal axes of a stream.
struct PcaModel {
  std::vector<double> mean;        // input_dim
  std::vector<double> components;  // input_dim x output_dim, row-major, orthonormal columns
  std::vector<double> explained;   // variance ratio per retained component
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  double retained_variance = 0.0;
  bool degenerate = false;  // all frames identical; output_dim == 1

  double component(std::size_t row, std::size_t col) const {
    return components[row * output_dim + col];
  }
};

/// Smallest number of principal components whose cumulative explained
/// variance reaches `variance_fraction`. Each component's largest-magnitude
/// loading is made positive. Uses the T x T Gram matrix when T < D.
PcaModel fit_pca(const FeatureStream& stream, double variance_fraction);
FeatureStream apply_pca(const PcaModel& model, const FeatureStream& stream);

/// "PCAM", u32 version, u64 D, u64 D', f64 retained, u8 degenerate, then
/// D f64 mean, D' f64 explained ratios, D*D' f64 components, little-endian.
void write_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

/// Per-dimension affine map to [0, 1]; constant dimensions map to 0.
FeatureStream minmax_normalize(const FeatureStream& stream);

/// Unary/clustering features: signed-root, l2, optional PCA.
FeatureStream preprocess_unary(const FeatureStream& raw, const PreprocessConfig& cfg);

}  // namespace rclust
