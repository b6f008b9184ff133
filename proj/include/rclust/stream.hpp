#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rclust {

/// Ordered T x D matrix of per-frame feature vectors. Row order is the
/// temporal order; values are always finite.
class FeatureStream {
 public:
  FeatureStream() = default;

  /// Takes ownership of row-major `values` (rows * dim entries). Empty `ids`
  /// are replaced by synthetic ids "f000000", "f000001", ...
  FeatureStream(std::size_t rows, std::size_t dim, std::vector<double> values,
                std::vector<std::string> ids = {});

  std::size_t length() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) {
    return {values_.data() + i * dim_, dim_};
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Copy of this stream with rows [first, last).
  FeatureStream slice(std::size_t first, std::size_t last) const;

  static std::string synthetic_id(std::size_t index);

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<std::string> ids_;
};

enum class SegSource { Adwin, Ac, Rcluster, Kmeans, Meanshift, GroundTruth };

std::string_view to_string(SegSource source);
SegSource parse_source(std::string_view text);

/// Temporal segmentation stored as segment start indices. boundaries[0] is
/// always 0 and the list is strictly increasing and below num_frames.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(std::vector<std::size_t> boundaries, std::size_t num_frames,
               SegSource source);

  /// One segment covering all frames.
  static Segmentation whole(std::size_t num_frames, SegSource source);

  const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }
  std::size_t num_frames() const noexcept { return num_frames_; }
  std::size_t num_segments() const noexcept { return boundaries_.size(); }
  SegSource source() const noexcept { return source_; }

  /// Inclusive end frame of segment `j`.
  std::size_t segment_end(std::size_t j) const;
  /// Segment index containing frame `i`.
  std::size_t segment_of(std::size_t i) const;
  /// Per-frame segment ids 0..num_segments-1.
  std::vector<std::size_t> labels() const;

  bool operator==(const Segmentation&) const = default;

 private:
  std::vector<std::size_t> boundaries_;
  std::size_t num_frames_ = 0;
  SegSource source_ = SegSource::GroundTruth;
};

/// Ground truth is a segmentation tagged with SegSource::GroundTruth.
using GroundTruth = Segmentation;

std::vector<std::size_t> boundaries_to_labels(std::span<const std::size_t> boundaries,
                                              std::size_t num_frames);
/// Start indices of maximal runs of equal labels.
std::vector<std::size_t> labels_to_boundaries(std::span<const std::size_t> labels);

// ---------------------------------------------------------------------------
// File I/O

enum class FeatureFormat { Csv, PackedBinary };

struct CsvOptions {
  bool header = false;     // first line is a column header
  bool id_column = false;  // first column holds frame ids
};

FeatureFormat format_from_path(const std::filesystem::path& path);

FeatureStream load_features(const std::filesystem::path& path, FeatureFormat format,
                            const CsvOptions& csv = {});
FeatureStream parse_features_csv(std::string_view text, const CsvOptions& csv = {});

/// Packed binary: "FSTR", u32 version, u64 T, u64 D, then T*D little-endian
/// float32 row-major.
void write_features_binary(const FeatureStream& stream, const std::filesystem::path& path);
void write_features_csv(const FeatureStream& stream, const std::filesystem::path& path,
                        bool with_ids = false);

nlohmann::ordered_json segmentation_to_json(const Segmentation& seg);
Segmentation segmentation_from_json(const nlohmann::json& doc);

/// Writes the segmentation document. `config`, when not null, is embedded
/// under the "config" key.
void write_segmentation(const Segmentation& seg, const std::filesystem::path& path,
                        const nlohmann::ordered_json& config = nullptr);
Segmentation load_segmentation(const std::filesystem::path& path);

/// Shared helper: writes text atomically enough for our purposes (truncate +
/// write), raising ErrorKind::Io on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace rclust
