#pragma once

#include <Eigen/Dense>

#include "rclust/stream.hpp"

namespace oracle {

using Mat = Eigen::MatrixXd;

inline Mat to_eigen(const rclust::FeatureStream& s) {
  Mat m(s.length(), s.dim());
  for (std::size_t i = 0; i < s.length(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j) m(i, j) = s.at(i, j);
  return m;
}

// Principal axes from the SVD of the centered data, oriented so the
// largest-magnitude loading is positive.
struct SvdOracle {
  Eigen::RowVectorXd mean;
  Mat axes;                 // dim x r
  Eigen::VectorXd ratios;   // explained variance ratios, descending
};

inline SvdOracle svd_oracle(const rclust::FeatureStream& s) {
  Mat x = to_eigen(s);
  SvdOracle o;
  o.mean = x.colwise().mean();
  x.rowwise() -= o.mean;
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinV);
  Eigen::VectorXd sv2 = svd.singularValues().array().square();
  o.ratios = sv2 / sv2.sum();
  o.axes = svd.matrixV();
  for (Eigen::Index c = 0; c < o.axes.cols(); ++c) {
    Eigen::Index arg;
    o.axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (o.axes(arg, c) < 0) o.axes.col(c) *= -1.0;
  }
  return o;
}

}  // namespace oracle
