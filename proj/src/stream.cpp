#include "rclust/stream.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rclust/error.hpp"

namespace rclust {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Format: return "format";
    case ErrorKind::Data: return "data";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::Compute: return "compute";
  }
  return "unknown";
}

FeatureStream::FeatureStream(std::size_t rows, std::size_t dim, std::vector<double> values,
                             std::vector<std::string> ids)
    : rows_(rows), dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (rows_ == 0 || dim_ == 0) throw Error(ErrorKind::Data, "feature stream must be non-empty");
  if (values_.size() != rows_ * dim_)
    throw Error(ErrorKind::Data, "feature stream value count does not match T*D");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw Error(ErrorKind::Data, "non-finite value at row " + std::to_string(k / dim_ + 1) +
                                       ", col " + std::to_string(k % dim_ + 1));
    }
  }
  if (ids_.empty()) {
    ids_.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i) ids_.push_back(synthetic_id(i));
  } else if (ids_.size() != rows_) {
    throw Error(ErrorKind::Data, "frame id count does not match row count");
  }
}

FeatureStream FeatureStream::slice(std::size_t first, std::size_t last) const {
  std::vector<double> v(values_.begin() + first * dim_, values_.begin() + last * dim_);
  std::vector<std::string> ids(ids_.begin() + first, ids_.begin() + last);
  return FeatureStream(last - first, dim_, std::move(v), std::move(ids));
}

std::string FeatureStream::synthetic_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "f" + digits;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::pair<SegSource, std::string_view> kSourceNames[] = {
    {SegSource::Adwin, "adwin"},         {SegSource::Ac, "ac"},
    {SegSource::Rcluster, "rcluster"},   {SegSource::Kmeans, "kmeans"},
    {SegSource::Meanshift, "meanshift"}, {SegSource::GroundTruth, "ground-truth"},
};
}  // namespace

std::string_view to_string(SegSource source) {
  for (auto& [s, name] : kSourceNames)
    if (s == source) return name;
  return "unknown";
}

SegSource parse_source(std::string_view text) {
  for (auto& [s, name] : kSourceNames)
    if (name == text) return s;
  throw Error(ErrorKind::Validation, "unknown segmentation source '" + std::string(text) + "'");
}

Segmentation::Segmentation(std::vector<std::size_t> boundaries, std::size_t num_frames,
                           SegSource source)
    : boundaries_(std::move(boundaries)), num_frames_(num_frames), source_(source) {
  if (num_frames_ == 0) throw Error(ErrorKind::Validation, "segmentation covers zero frames");
  if (boundaries_.empty() || boundaries_.front() != 0)
    throw Error(ErrorKind::Validation, "segmentation must start at frame 0");
  for (std::size_t j = 1; j < boundaries_.size(); ++j) {
    if (boundaries_[j] <= boundaries_[j - 1])
      throw Error(ErrorKind::Validation, "segment boundaries are not strictly increasing");
  }
  if (boundaries_.back() >= num_frames_)
    throw Error(ErrorKind::Validation, "segment boundary beyond last frame");
}

Segmentation Segmentation::whole(std::size_t num_frames, SegSource source) {
  return Segmentation({0}, num_frames, source);
}

std::size_t Segmentation::segment_end(std::size_t j) const {
  return j + 1 < boundaries_.size() ? boundaries_[j + 1] - 1 : num_frames_ - 1;
}

std::size_t Segmentation::segment_of(std::size_t i) const {
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), i);
  return static_cast<std::size_t>(it - boundaries_.begin()) - 1;
}

std::vector<std::size_t> Segmentation::labels() const {
  return boundaries_to_labels(boundaries_, num_frames_);
}

std::vector<std::size_t> boundaries_to_labels(std::span<const std::size_t> boundaries,
                                              std::size_t num_frames) {
  std::vector<std::size_t> labels(num_frames, 0);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < num_frames; ++i) {
    while (seg + 1 < boundaries.size() && boundaries[seg + 1] <= i) ++seg;
    labels[i] = seg;
  }
  return labels;
}

std::vector<std::size_t> labels_to_boundaries(std::span<const std::size_t> labels) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (i == 0 || labels[i] != labels[i - 1]) starts.push_back(i);
  return starts;
}

// ---------------------------------------------------------------------------
// I/O

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

FeatureFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".bin" || ext == ".fstr") return FeatureFormat::PackedBinary;
  return FeatureFormat::Csv;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw Error(ErrorKind::Format, "unparsable value '" + std::string(cell) + "' at row " +
                                       std::to_string(row) + ", col " + std::to_string(col));
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Data, "non-finite value at row " + std::to_string(row) + ", col " +
                                     std::to_string(col));
  }
  return v;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::string_view data, std::size_t& pos, const std::string& what) {
  if (pos + sizeof(T) > data.size()) throw Error(ErrorKind::Format, what + ": truncated file");
  T value;
  std::memcpy(&value, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

FeatureStream parse_features_binary(std::string_view data, const std::string& name) {
  std::size_t pos = 0;
  if (data.size() < 4 || data.substr(0, 4) != "FSTR")
    throw Error(ErrorKind::Format, name + ": bad magic (expected FSTR)");
  pos = 4;
  auto version = get_le<std::uint32_t>(data, pos, name);
  if (version != 1) throw Error(ErrorKind::Format, name + ": unsupported version " + std::to_string(version));
  auto rows = get_le<std::uint64_t>(data, pos, name);
  auto dim = get_le<std::uint64_t>(data, pos, name);
  if (rows == 0 || dim == 0) throw Error(ErrorKind::Data, name + ": empty feature stream");
  if (data.size() - pos != rows * dim * sizeof(float))
    throw Error(ErrorKind::Format, name + ": payload size does not match header T*D");
  std::vector<double> values(rows * dim);
  for (std::size_t k = 0; k < values.size(); ++k) {
    float f = get_le<float>(data, pos, name);
    if (!std::isfinite(f)) {
      throw Error(ErrorKind::Data, name + ": non-finite value at row " +
                                       std::to_string(k / dim + 1) + ", col " +
                                       std::to_string(k % dim + 1));
    }
    values[k] = f;
  }
  return FeatureStream(rows, dim, std::move(values));
}

}  // namespace

FeatureStream parse_features_csv(std::string_view text, const CsvOptions& csv) {
  std::vector<double> values;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool skipped_header = !csv.header;

  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    ++rows;
    std::size_t cols = 0;
    std::size_t col_no = 0;
    while (true) {
      auto comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      ++col_no;
      if (csv.id_column && col_no == 1) {
        ids.emplace_back(trim(cell));
      } else {
        values.push_back(parse_real(cell, rows, col_no));
        ++cols;
      }
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 1) {
      dim = cols;
      if (dim == 0) throw Error(ErrorKind::Format, "row 1 has no feature columns");
    } else if (cols != dim) {
      throw Error(ErrorKind::Format, "ragged row " + std::to_string(rows) + ": expected " +
                                         std::to_string(dim) + " columns, found " +
                                         std::to_string(cols));
    }
  }
  if (rows == 0) throw Error(ErrorKind::Data, "feature file contains no rows");
  return FeatureStream(rows, dim, std::move(values), std::move(ids));
}

FeatureStream load_features(const std::filesystem::path& path, FeatureFormat format,
                            const CsvOptions& csv) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::Io, "no such file '" + path.string() + "'");
  std::string data = read_text_file(path);
  if (data.empty()) throw Error(ErrorKind::Data, "empty feature file '" + path.string() + "'");
  if (format == FeatureFormat::PackedBinary) return parse_features_binary(data, path.string());
  try {
    return parse_features_csv(data, csv);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_features_binary(const FeatureStream& stream, const std::filesystem::path& path) {
  std::string out = "FSTR";
  out.reserve(24 + stream.values().size() * sizeof(float));
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint64_t>(out, stream.length());
  put_le<std::uint64_t>(out, stream.dim());
  for (double v : stream.values()) put_le<float>(out, static_cast<float>(v));
  write_text_file(path, out);
}

void write_features_csv(const FeatureStream& stream, const std::filesystem::path& path,
                        bool with_ids) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < stream.length(); ++i) {
    if (with_ids) {
      out += stream.ids()[i];
      out += ',';
    }
    auto row = stream.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[j]);
      out.append(buf, ptr);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

nlohmann::ordered_json segmentation_to_json(const Segmentation& seg) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["source"] = std::string(to_string(seg.source()));
  doc["num_frames"] = seg.num_frames();
  auto segments = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < seg.num_segments(); ++j) {
    segments.push_back({{"start", seg.boundaries()[j]}, {"end", seg.segment_end(j)}});
  }
  doc["segments"] = std::move(segments);
  return doc;
}

Segmentation segmentation_from_json(const nlohmann::json& doc) {
  try {
    auto version = doc.at("version").get<int>();
    if (version != 1) throw Error(ErrorKind::Validation, "unsupported segmentation version");
    auto source = parse_source(doc.at("source").get<std::string>());
    auto num_frames = doc.at("num_frames").get<std::size_t>();
    const auto& segments = doc.at("segments");
    if (!segments.is_array() || segments.empty())
      throw Error(ErrorKind::Validation, "segmentation has no segments");
    std::vector<std::size_t> starts;
    std::size_t expected_start = 0;
    for (std::size_t j = 0; j < segments.size(); ++j) {
      auto start = segments[j].at("start").get<std::size_t>();
      auto end = segments[j].at("end").get<std::size_t>();
      if (j == 0 && start != 0)
        throw Error(ErrorKind::Validation, "first segment must start at frame 0");
      if (end < start)
        throw Error(ErrorKind::Validation, "segment " + std::to_string(j) + " ends before it starts");
      if (start < expected_start)
        throw Error(ErrorKind::Validation, "segment " + std::to_string(j) + " overlaps its predecessor");
      if (start > expected_start)
        throw Error(ErrorKind::Validation, "gap before segment " + std::to_string(j));
      starts.push_back(start);
      expected_start = end + 1;
    }
    if (expected_start != num_frames)
      throw Error(ErrorKind::Validation, "segments cover " + std::to_string(expected_start) +
                                             " frames, header says " + std::to_string(num_frames));
    return Segmentation(std::move(starts), num_frames, source);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed segmentation document: ") + e.what());
  }
}

void write_segmentation(const Segmentation& seg, const std::filesystem::path& path,
                        const nlohmann::ordered_json& config) {
  auto doc = segmentation_to_json(seg);
  if (!config.is_null()) doc["config"] = config;
  write_text_file(path, doc.dump(2) + "\n");
}

Segmentation load_segmentation(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return segmentation_from_json(doc);
}

}  // namespace rclust
