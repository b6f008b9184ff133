#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rclust/adwin.hpp"
#include "rclust/clustering.hpp"
#include "rclust/fusion.hpp"
#include "rclust/preprocess.hpp"
#include "rclust/stream.hpp"

namespace rclust {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

/// One-to-one matching of interior boundaries (frame 0 is ignored) where a
/// pair matches when |pred - gt| <= tolerance. Returns a maximum matching,
/// found by a single sweep over both sorted lists.
MatchCounts match_boundaries(const Segmentation& pred, const GroundTruth& gt,
                             std::size_t tolerance);

Scores f_measure(const MatchCounts& counts);

struct EvalReport {
  MatchCounts counts;
  Scores scores;
  std::size_t tolerance = 0;
};

EvalReport evaluate(const Segmentation& pred, const GroundTruth& gt, std::size_t tolerance);
nlohmann::ordered_json to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Synthetic benchmark streams

/// Piecewise-stationary Gaussian stream. Consecutive segment means differ by
/// `separation * sigma` in euclidean norm along a random direction; every
/// frame adds i.i.d. N(0, sigma^2) noise per dimension. The first mean is
/// `offset * sigma` in every dimension, mimicking the positive activations of
/// a ReLU network. The default sigma keeps values near unit scale, the range
/// the ADWIN threshold assumes; the preprocessed features do not depend on it.
struct SynthSpec {
  std::size_t num_segments = 5;
  std::size_t min_length = 30;
  std::size_t max_length = 80;
  std::size_t dim = 16;
  double separation = 4.0;
  double sigma = 0.25;
  double offset = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthData {
  FeatureStream stream;
  GroundTruth truth;
};

SynthData generate_synthetic(const SynthSpec& spec);

/// Step stream for detector checks: `length` frames, mean 0 before `change`
/// and `magnitude` * u after it (u a random unit vector), N(0, sigma^2) noise.
FeatureStream generate_step(std::size_t length, std::size_t dim, std::size_t change,
                            double magnitude, double sigma, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Methods and sweeps

enum class Method { Adwin, Ac, Rcluster, Kmeans, Meanshift };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
SegSource source_of(Method method);

struct MethodParams {
  PreprocessConfig preprocess;
  AdwinConfig adwin;
  AcConfig ac;
  GcConfig gc;
  BaselineConfig baseline;
  std::size_t tolerance = 5;

  void validate() const;
};

nlohmann::ordered_json to_json(const MethodParams& params);

/// A raw stream with its conditioned views: signed-root + l2 + PCA features
/// for clustering, ADWIN and the unaries; min-max features for the pairwise term.
struct PreparedStream {
  FeatureStream raw;
  FeatureStream unary;
  FeatureStream pairwise;
};

PreparedStream prepare(FeatureStream raw, const PreprocessConfig& cfg);

Segmentation run_method(Method method, const PreparedStream& data, const MethodParams& params);

struct Dataset {
  std::string name;
  PreparedStream data;
  PreprocessConfig preprocess;  // how `data` was conditioned
  GroundTruth truth;
};

Dataset make_dataset(std::string name, FeatureStream raw, GroundTruth truth,
                     const PreprocessConfig& cfg = {});

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepCell {
  std::vector<double> point;        // one value per axis
  std::vector<double> per_dataset;  // F-measure per dataset
  double fm_mean = 0.0;
  double fm_std = 0.0;              // population standard deviation over datasets
  bool valid = true;
  std::string error;
};

struct SweepGrid {
  Method method = Method::Rcluster;
  MethodParams base;
  std::vector<SweepAxis> axes;
  std::vector<std::string> datasets;
  std::vector<SweepCell> cells;  // cartesian product, last axis fastest
  std::optional<std::size_t> best;
};

/// Parses "v", "a,b,c" or the inclusive range "start:stop:step" (stop is
/// reached within 1e-12; values are rounded to 12 decimals).
std::vector<double> parse_axis_values(std::string_view text);

/// Names accepted as sweep axes.
const std::vector<std::string>& sweep_axis_names();

/// Sets the named parameter; throws ErrorKind::Usage for unknown names.
void set_param(MethodParams& params, const std::string& name, double value);

/// Evaluates every grid cell on every dataset. Datasets run concurrently;
/// results are gathered by index so the output is independent of scheduling.
/// A cell whose run throws is marked invalid instead of aborting the sweep.
SweepGrid sweep(const std::vector<Dataset>& datasets, Method method, const MethodParams& base,
                const std::vector<SweepAxis>& axes);

nlohmann::ordered_json to_json(const SweepGrid& grid);
/// Tab-separated table: one row per cell, one column per axis, then fm_mean, fm_std, valid.
std::string to_table(const SweepGrid& grid);

}  // namespace rclust
