#include "rclust/preprocess.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "rclust/error.hpp"

namespace rclust {

void PreprocessConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(ErrorKind::Usage, "alpha must be > 0");
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
    throw Error(ErrorKind::Usage, "variance fraction must be in (0, 1]");
}

std::vector<double> signed_root_l2(std::span<const double> v, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::Usage, "alpha must be > 0");
  std::vector<double> out(v.size());
  double sq = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) throw Error(ErrorKind::Data, "non-finite input to signed_root_l2");
    double r = std::pow(std::abs(v[j]), alpha);
    out[j] = v[j] < 0.0 ? -r : r;
    sq += out[j] * out[j];
  }
  if (sq > 0.0) {
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : out) x *= inv;
  }
  return out;
}

FeatureStream signed_root_l2(const FeatureStream& stream, double alpha) {
  std::vector<double> values;
  values.reserve(stream.values().size());
  for (std::size_t i = 0; i < stream.length(); ++i) {
    auto r = signed_root_l2(stream.row(i), alpha);
    values.insert(values.end(), r.begin(), r.end());
  }
  return FeatureStream(stream.length(), stream.dim(), std::move(values), stream.ids());
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix to_matrix(const FeatureStream& s) {
  return Eigen::Map<const Matrix>(s.values().data(), static_cast<Eigen::Index>(s.length()),
                                  static_cast<Eigen::Index>(s.dim()));
}

}  // namespace

PcaModel fit_pca(const FeatureStream& stream, double variance_fraction) {
  if (stream.length() < 2) throw Error(ErrorKind::Data, "PCA needs at least 2 frames");
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
    throw Error(ErrorKind::Usage, "variance fraction must be in (0, 1]");

  const auto rows = static_cast<Eigen::Index>(stream.length());
  const auto dim = static_cast<Eigen::Index>(stream.dim());
  Matrix x = to_matrix(stream);
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  PcaModel model;
  model.input_dim = stream.dim();
  model.mean.assign(mean.data(), mean.data() + dim);

  // Eigenpairs of the scatter matrix, ascending from Eigen.
  Eigen::VectorXd evals;
  Matrix evecs;  // dim x n, columns are unit principal axes
  if (rows < dim) {
    Eigen::MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    evals = es.eigenvalues();
    evecs = Matrix(dim, rows);
    for (Eigen::Index c = 0; c < rows; ++c) {
      double lambda = std::max(evals(c), 0.0);
      Eigen::VectorXd axis = x.transpose() * es.eigenvectors().col(c);
      double n = axis.norm();
      if (lambda > 0.0 && n > 0.0) {
        evecs.col(c) = axis / n;
      } else {
        evecs.col(c).setZero();
      }
    }
  } else {
    Eigen::MatrixXd scatter = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
  }

  const Eigen::Index n = evals.size();
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) total += std::max(evals(c), 0.0);
  const double scale = std::max(1.0, x.cwiseAbs2().sum());

  if (total <= 1e-14 * scale) {
    model.degenerate = true;
    model.output_dim = 1;
    model.components.assign(stream.dim(), 0.0);
    model.components[0] = 1.0;
    model.explained = {1.0};
    model.retained_variance = 1.0;
    return model;
  }

  std::size_t keep = 0;
  double cumulative = 0.0;
  for (Eigen::Index c = n - 1; c >= 0; --c) {
    double ratio = std::max(evals(c), 0.0) / total;
    cumulative += ratio;
    model.explained.push_back(ratio);
    ++keep;
    if (cumulative >= variance_fraction - 1e-10) break;
  }
  model.output_dim = keep;
  model.retained_variance = std::min(cumulative, 1.0);
  model.components.assign(stream.dim() * keep, 0.0);
  for (std::size_t k = 0; k < keep; ++k) {
    Eigen::VectorXd axis = evecs.col(n - 1 - static_cast<Eigen::Index>(k));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    for (Eigen::Index r = 0; r < dim; ++r) model.components[r * keep + k] = axis(r);
  }
  return model;
}

FeatureStream apply_pca(const PcaModel& model, const FeatureStream& stream) {
  if (stream.dim() != model.input_dim) {
    throw Error(ErrorKind::Data, "PCA dimension mismatch: model expects " +
                                     std::to_string(model.input_dim) + ", stream has " +
                                     std::to_string(stream.dim()));
  }
  const std::size_t out_dim = model.output_dim;
  std::vector<double> out(stream.length() * out_dim, 0.0);
  std::vector<double> centered(model.input_dim);
  for (std::size_t i = 0; i < stream.length(); ++i) {
    auto row = stream.row(i);
    for (std::size_t j = 0; j < model.input_dim; ++j) centered[j] = row[j] - model.mean[j];
    double* dst = out.data() + i * out_dim;
    for (std::size_t j = 0; j < model.input_dim; ++j) {
      const double c = centered[j];
      const double* comp = model.components.data() + j * out_dim;
      for (std::size_t k = 0; k < out_dim; ++k) dst[k] += c * comp[k];
    }
  }
  return FeatureStream(stream.length(), out_dim, std::move(out), stream.ids());
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& data, std::size_t& pos) {
  if (pos + sizeof(T) > data.size()) throw Error(ErrorKind::Format, "PCA model file truncated");
  T v;
  std::memcpy(&v, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::string out = "PCAM";
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, model.input_dim);
  put<std::uint64_t>(out, model.output_dim);
  put<double>(out, model.retained_variance);
  put<std::uint8_t>(out, model.degenerate ? 1 : 0);
  for (double v : model.mean) put(out, v);
  for (double v : model.explained) put(out, v);
  for (double v : model.components) put(out, v);
  write_text_file(path, out);
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::string data = read_text_file(path);
  if (data.size() < 4 || data.compare(0, 4, "PCAM") != 0)
    throw Error(ErrorKind::Format, path.string() + ": bad magic (expected PCAM)");
  std::size_t pos = 4;
  if (take<std::uint32_t>(data, pos) != 1)
    throw Error(ErrorKind::Format, path.string() + ": unsupported PCA model version");
  PcaModel m;
  m.input_dim = take<std::uint64_t>(data, pos);
  m.output_dim = take<std::uint64_t>(data, pos);
  m.retained_variance = take<double>(data, pos);
  m.degenerate = take<std::uint8_t>(data, pos) != 0;
  if (m.input_dim == 0 || m.output_dim == 0 || m.output_dim > m.input_dim)
    throw Error(ErrorKind::Format, path.string() + ": invalid PCA dimensions");
  if (data.size() - pos != (m.input_dim + m.output_dim + m.input_dim * m.output_dim) * 8)
    throw Error(ErrorKind::Format, path.string() + ": PCA payload size mismatch");
  m.mean.resize(m.input_dim);
  m.explained.resize(m.output_dim);
  m.components.resize(m.input_dim * m.output_dim);
  for (auto& v : m.mean) v = take<double>(data, pos);
  for (auto& v : m.explained) v = take<double>(data, pos);
  for (auto& v : m.components) v = take<double>(data, pos);
  return m;
}

FeatureStream minmax_normalize(const FeatureStream& stream) {
  const std::size_t dim = stream.dim();
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < stream.length(); ++i) {
    auto row = stream.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }
  std::vector<double> out(stream.values().size());
  for (std::size_t i = 0; i < stream.length(); ++i) {
    auto row = stream.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      double range = hi[j] - lo[j];
      out[i * dim + j] = range > 0.0 ? std::clamp((row[j] - lo[j]) / range, 0.0, 1.0) : 0.0;
    }
  }
  return FeatureStream(stream.length(), dim, std::move(out), stream.ids());
}

FeatureStream preprocess_unary(const FeatureStream& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  auto normalized = signed_root_l2(raw, cfg.alpha);
  if (!cfg.pca || normalized.length() < 2) return normalized;
  return apply_pca(fit_pca(normalized, cfg.variance_fraction), normalized);
}

}  // namespace rclust
