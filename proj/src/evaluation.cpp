#include "rclust/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "rclust/error.hpp"
#include "rclust/random.hpp"

namespace rclust {

MatchCounts match_boundaries(const Segmentation& pred, const GroundTruth& gt,
                             std::size_t tolerance) {
  if (pred.num_frames() != gt.num_frames()) {
    throw Error(ErrorKind::Data, "prediction covers " + std::to_string(pred.num_frames()) +
                                     " frames, ground truth " + std::to_string(gt.num_frames()));
  }
  const auto& p = pred.boundaries();
  const auto& g = gt.boundaries();
  // Both lists are sorted; skipping index 0 drops the implicit boundary.
  std::size_t i = 1, j = 1, tp = 0;
  while (i < p.size() && j < g.size()) {
    if (p[i] + tolerance < g[j]) {
      ++i;
    } else if (g[j] + tolerance < p[i]) {
      ++j;
    } else {
      ++tp;
      ++i;
      ++j;
    }
  }
  MatchCounts c;
  c.tp = tp;
  c.fp = (p.size() - 1) - tp;
  c.fn = (g.size() - 1) - tp;
  return c;
}

Scores f_measure(const MatchCounts& counts) {
  Scores s;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) s.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) s.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (s.precision + s.recall > 0.0)
    s.f_measure = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

EvalReport evaluate(const Segmentation& pred, const GroundTruth& gt, std::size_t tolerance) {
  EvalReport r;
  r.counts = match_boundaries(pred, gt, tolerance);
  r.scores = f_measure(r.counts);
  r.tolerance = tolerance;
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["tolerance"] = report.tolerance;
  doc["tp"] = report.counts.tp;
  doc["fp"] = report.counts.fp;
  doc["fn"] = report.counts.fn;
  doc["precision"] = report.scores.precision;
  doc["recall"] = report.scores.recall;
  doc["f_measure"] = report.scores.f_measure;
  return doc;
}

// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
  if (num_segments < 1) throw Error(ErrorKind::Usage, "synthetic stream needs >= 1 segment");
  if (min_length < 1 || max_length < min_length)
    throw Error(ErrorKind::Usage, "segment length range must satisfy 1 <= min <= max");
  if (dim < 1) throw Error(ErrorKind::Usage, "synthetic dimension must be >= 1");
  if (!(separation > 0.0) || !(sigma > 0.0))
    throw Error(ErrorKind::Usage, "separation and sigma must be > 0");
  if (!std::isfinite(offset)) throw Error(ErrorKind::Usage, "offset must be finite");
}

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> u(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& v : u) {
      v = rng.normal();
      n2 += v * v;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& v : u) v *= inv;
  return u;
}

}  // namespace

SynthData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<std::size_t> lengths(spec.num_segments);
  for (auto& len : lengths)
    len = spec.min_length + rng.uniform_index(spec.max_length - spec.min_length + 1);
  const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});

  std::vector<double> mean(spec.dim, spec.offset * spec.sigma);
  std::vector<double> values;
  values.reserve(total * spec.dim);
  std::vector<std::size_t> starts;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < spec.num_segments; ++s) {
    if (s > 0) {
      auto u = random_unit(rng, spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) mean[j] += spec.separation * spec.sigma * u[j];
    }
    starts.push_back(pos);
    for (std::size_t t = 0; t < lengths[s]; ++t)
      for (std::size_t j = 0; j < spec.dim; ++j) values.push_back(mean[j] + spec.sigma * rng.normal());
    pos += lengths[s];
  }
  SynthData out{FeatureStream(total, spec.dim, std::move(values)),
                GroundTruth(std::move(starts), total, SegSource::GroundTruth)};
  return out;
}

FeatureStream generate_step(std::size_t length, std::size_t dim, std::size_t change,
                            double magnitude, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  auto u = random_unit(rng, dim);
  std::vector<double> values;
  values.reserve(length * dim);
  for (std::size_t t = 0; t < length; ++t) {
    const double level = t >= change ? magnitude : 0.0;
    for (std::size_t j = 0; j < dim; ++j) values.push_back(level * u[j] + sigma * rng.normal());
  }
  return FeatureStream(length, dim, std::move(values));
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::Adwin, "adwin"},   {Method::Ac, "ac"},           {Method::Rcluster, "rcluster"},
    {Method::Kmeans, "kmeans"}, {Method::Meanshift, "meanshift"},
};
}  // namespace

std::string_view to_string(Method method) {
  for (auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (auto& [m, name] : kMethodNames)
    if (name == text) return m;
  throw Error(ErrorKind::Usage, "unknown method '" + std::string(text) + "'");
}

SegSource source_of(Method method) {
  switch (method) {
    case Method::Adwin: return SegSource::Adwin;
    case Method::Ac: return SegSource::Ac;
    case Method::Rcluster: return SegSource::Rcluster;
    case Method::Kmeans: return SegSource::Kmeans;
    case Method::Meanshift: return SegSource::Meanshift;
  }
  return SegSource::Rcluster;
}

void MethodParams::validate() const {
  preprocess.validate();
  adwin.validate();
  ac.validate();
  gc.validate();
  if (baseline.kmeans_k < 1) throw Error(ErrorKind::Usage, "kmeans-k must be >= 1");
  if (!(baseline.meanshift_bandwidth > 0.0))
    throw Error(ErrorKind::Usage, "bandwidth must be > 0");
}

nlohmann::ordered_json to_json(const MethodParams& p) {
  nlohmann::ordered_json doc;
  doc["alpha"] = p.preprocess.alpha;
  doc["variance"] = p.preprocess.variance_fraction;
  doc["pca"] = p.preprocess.pca;
  doc["delta"] = p.adwin.delta;
  doc["p_norm"] = p.adwin.p_norm;
  doc["min_subwindow"] = p.adwin.min_subwindow;
  if (p.adwin.max_window) doc["max_window"] = *p.adwin.max_window;
  doc["adwin_statistic"] = p.adwin.statistic == AdwinStatistic::NormMean ? "norm-mean" : "mean-vector";
  doc["linkage"] = std::string(to_string(p.ac.linkage));
  doc["metric"] = std::string(to_string(p.ac.metric));
  doc["cut"] = p.ac.cut;
  doc["omega1"] = p.gc.omega1;
  doc["omega2"] = p.gc.omega2;
  doc["radius"] = p.gc.radius;
  doc["kmeans_k"] = p.baseline.kmeans_k;
  doc["seed"] = p.baseline.kmeans_seed;
  doc["bandwidth"] = p.baseline.meanshift_bandwidth;
  doc["tolerance"] = p.tolerance;
  return doc;
}

PreparedStream prepare(FeatureStream raw, const PreprocessConfig& cfg) {
  PreparedStream out;
  out.unary = preprocess_unary(raw, cfg);
  out.pairwise = minmax_normalize(raw);
  out.raw = std::move(raw);
  return out;
}

Dataset make_dataset(std::string name, FeatureStream raw, GroundTruth truth,
                     const PreprocessConfig& cfg) {
  if (truth.num_frames() != raw.length()) {
    throw Error(ErrorKind::Data, name + ": ground truth covers " +
                                     std::to_string(truth.num_frames()) + " frames, stream has " +
                                     std::to_string(raw.length()));
  }
  return Dataset{std::move(name), prepare(std::move(raw), cfg), cfg, std::move(truth)};
}

Segmentation run_method(Method method, const PreparedStream& data, const MethodParams& params) {
  params.validate();
  const auto& x = data.unary;
  switch (method) {
    case Method::Adwin: return detect_boundaries(x, params.adwin);
    case Method::Ac: return ac_segment(x, params.ac);
    case Method::Rcluster: {
      auto ac = ac_segment(x, params.ac);
      auto adw = detect_boundaries(x, params.adwin);
      return rcluster(x, data.pairwise, ac, adw, params.gc);
    }
    case Method::Kmeans:
      return labels_to_segments(kmeans(x, params.baseline), SegSource::Kmeans);
    case Method::Meanshift:
      return labels_to_segments(meanshift(x, params.baseline), SegSource::Meanshift);
  }
  throw Error(ErrorKind::Usage, "unknown method");
}

// ---------------------------------------------------------------------------

namespace {

using Setter = std::function<void(MethodParams&, double)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"omega1", [](MethodParams& p, double v) { p.gc.omega1 = v; }},
      {"omega2", [](MethodParams& p, double v) { p.gc.omega2 = v; }},
      {"radius", [](MethodParams& p, double v) { p.gc.radius = static_cast<std::size_t>(std::llround(v)); }},
      {"cut", [](MethodParams& p, double v) { p.ac.cut = v; }},
      {"delta", [](MethodParams& p, double v) { p.adwin.delta = v; }},
      {"p-norm", [](MethodParams& p, double v) { p.adwin.p_norm = static_cast<int>(std::lround(v)); }},
      {"min-subwindow", [](MethodParams& p, double v) { p.adwin.min_subwindow = static_cast<std::size_t>(std::llround(v)); }},
      {"kmeans-k", [](MethodParams& p, double v) { p.baseline.kmeans_k = static_cast<std::size_t>(std::llround(v)); }},
      {"bandwidth", [](MethodParams& p, double v) { p.baseline.meanshift_bandwidth = v; }},
      {"tolerance", [](MethodParams& p, double v) { p.tolerance = static_cast<std::size_t>(std::llround(v)); }},
      {"alpha", [](MethodParams& p, double v) { p.preprocess.alpha = v; }},
      {"variance", [](MethodParams& p, double v) { p.preprocess.variance_fraction = v; }},
  };
  return table;
}

// Memoizes the expensive intermediate results of one dataset across cells.
class DatasetRunner {
 public:
  explicit DatasetRunner(const Dataset& ds) : ds_(ds) {}

  Segmentation run(Method method, const MethodParams& p) {
    const PreparedStream& data = prepared(p.preprocess);
    switch (method) {
      case Method::Adwin: return adwin(data, p);
      case Method::Ac: return ac(data, p);
      case Method::Rcluster:
        return rcluster(data.unary, data.pairwise, ac(data, p), adwin(data, p), p.gc);
      default: return run_method(method, data, p);
    }
  }

 private:
  static std::string pre_key(const PreprocessConfig& c) {
    std::ostringstream k;
    k.precision(17);
    k << c.alpha << '/' << c.variance_fraction << '/' << c.pca;
    return k.str();
  }

  const PreparedStream& prepared(const PreprocessConfig& c) {
    auto key = pre_key(c);
    if (key == pre_key(ds_.preprocess)) return ds_.data;
    auto it = prepared_.find(key);
    if (it == prepared_.end()) it = prepared_.emplace(key, prepare(ds_.data.raw, c)).first;
    return it->second;
  }

  Segmentation adwin(const PreparedStream& data, const MethodParams& p) {
    std::ostringstream k;
    k.precision(17);
    k << &data << '/' << p.adwin.delta << '/' << p.adwin.p_norm << '/' << p.adwin.min_subwindow
      << '/' << p.adwin.max_window.value_or(0) << '/' << static_cast<int>(p.adwin.statistic);
    auto it = adwin_.find(k.str());
    if (it == adwin_.end()) it = adwin_.emplace(k.str(), detect_boundaries(data.unary, p.adwin)).first;
    return it->second;
  }

  Segmentation ac(const PreparedStream& data, const MethodParams& p) {
    p.ac.validate();
    if (data.unary.length() < 2) return Segmentation::whole(data.unary.length(), SegSource::Ac);
    std::ostringstream k;
    k << &data << '/' << static_cast<int>(p.ac.linkage) << '/' << static_cast<int>(p.ac.metric);
    auto it = dendro_.find(k.str());
    if (it == dendro_.end()) it = dendro_.emplace(k.str(), linkage(data.unary, p.ac)).first;
    return labels_to_segments(cut_dendrogram(it->second, p.ac.cut), SegSource::Ac);
  }

  const Dataset& ds_;
  std::map<std::string, PreparedStream> prepared_;
  std::map<std::string, Segmentation> adwin_;
  std::map<std::string, Dendrogram> dendro_;
};

}  // namespace

std::vector<double> parse_axis_values(std::string_view text) {
  auto number = [&](std::string_view part) {
    double v = 0.0;
    if (!part.empty() && part.front() == '+') part.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty() || !std::isfinite(v))
      throw Error(ErrorKind::Usage, "bad number '" + std::string(part) + "' in '" + std::string(text) + "'");
    return v;
  };
  std::vector<double> out;
  if (auto c1 = text.find(':'); c1 != std::string_view::npos) {
    auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos)
      throw Error(ErrorKind::Usage, "range '" + std::string(text) + "' must be start:stop:step");
    double start = number(text.substr(0, c1));
    double stop = number(text.substr(c1 + 1, c2 - c1 - 1));
    double step = number(text.substr(c2 + 1));
    if (!(step > 0.0) || stop < start)
      throw Error(ErrorKind::Usage, "range '" + std::string(text) + "' needs step > 0 and stop >= start");
    if ((stop - start) / step > 1e6) throw Error(ErrorKind::Usage, "range '" + std::string(text) + "' too long");
    for (std::size_t i = 0;; ++i) {
      double v = start + static_cast<double>(i) * step;
      if (v > stop + 1e-12) break;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  while (true) {
    auto comma = text.find(',');
    out.push_back(number(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

const std::vector<std::string>& sweep_axis_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (auto& [name, _] : setters()) n.push_back(name);
    return n;
  }();
  return names;
}

void set_param(MethodParams& params, const std::string& name, double value) {
  for (auto& [n, fn] : setters()) {
    if (n == name) {
      fn(params, value);
      return;
    }
  }
  throw Error(ErrorKind::Usage, "unknown sweep parameter '" + name + "'");
}

SweepGrid sweep(const std::vector<Dataset>& datasets, Method method, const MethodParams& base,
                const std::vector<SweepAxis>& axes) {
  if (datasets.empty()) throw Error(ErrorKind::Usage, "sweep needs at least one dataset");
  SweepGrid grid;
  grid.method = method;
  grid.base = base;
  grid.axes = axes;
  std::size_t num_cells = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw Error(ErrorKind::Usage, "sweep axis '" + axis.name + "' is empty");
    MethodParams probe = base;
    set_param(probe, axis.name, axis.values.front());
    num_cells *= axis.values.size();
  }
  for (const auto& ds : datasets) grid.datasets.push_back(ds.name);

  grid.cells.resize(num_cells);
  std::vector<MethodParams> params(num_cells, base);
  for (std::size_t c = 0; c < num_cells; ++c) {
    std::size_t rem = c;
    grid.cells[c].point.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& vals = axes[a].values;
      grid.cells[c].point[a] = vals[rem % vals.size()];
      rem /= vals.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a)
      set_param(params[c], axes[a].name, grid.cells[c].point[a]);
    grid.cells[c].per_dataset.assign(datasets.size(), 0.0);
  }

  // errors[c][d] holds the failure message of cell c on dataset d, if any.
  std::vector<std::vector<std::string>> errors(num_cells,
                                               std::vector<std::string>(datasets.size()));
  const auto num_ds = static_cast<std::ptrdiff_t>(datasets.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t d = 0; d < num_ds; ++d) {
    const auto di = static_cast<std::size_t>(d);
    DatasetRunner runner(datasets[di]);
    for (std::size_t c = 0; c < num_cells; ++c) {
      try {
        params[c].validate();
        auto seg = runner.run(method, params[c]);
        grid.cells[c].per_dataset[di] =
            evaluate(seg, datasets[di].truth, params[c].tolerance).scores.f_measure;
      } catch (const std::exception& e) {
        errors[c][di] = e.what();
      }
    }
  }

  for (std::size_t c = 0; c < num_cells; ++c) {
    auto& cell = grid.cells[c];
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      if (!errors[c][d].empty()) {
        cell.valid = false;
        cell.error = datasets[d].name + ": " + errors[c][d];
        break;
      }
    }
    if (!cell.valid) continue;
    const double n = static_cast<double>(datasets.size());
    double sum = 0.0;
    for (double v : cell.per_dataset) sum += v;
    cell.fm_mean = sum / n;
    double var = 0.0;
    for (double v : cell.per_dataset) var += (v - cell.fm_mean) * (v - cell.fm_mean);
    cell.fm_std = std::sqrt(var / n);
    if (!grid.best || cell.fm_mean > grid.cells[*grid.best].fm_mean) grid.best = c;
  }
  return grid;
}

nlohmann::ordered_json to_json(const SweepGrid& grid) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["method"] = std::string(to_string(grid.method));
  doc["config"] = to_json(grid.base);
  auto axes = nlohmann::ordered_json::object();
  for (const auto& a : grid.axes) axes[a.name] = a.values;
  doc["axes"] = std::move(axes);
  doc["datasets"] = grid.datasets;
  auto cell_to_json = [&](const SweepCell& cell) {
    nlohmann::ordered_json c;
    auto point = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < grid.axes.size(); ++a) point[grid.axes[a].name] = cell.point[a];
    c["params"] = std::move(point);
    c["valid"] = cell.valid;
    if (cell.valid) {
      c["fm_mean"] = cell.fm_mean;
      c["fm_std"] = cell.fm_std;
      c["per_dataset"] = cell.per_dataset;
    } else {
      c["error"] = cell.error;
    }
    return c;
  };
  auto cells = nlohmann::ordered_json::array();
  for (const auto& cell : grid.cells) cells.push_back(cell_to_json(cell));
  doc["cells"] = std::move(cells);
  if (grid.best) {
    auto best = cell_to_json(grid.cells[*grid.best]);
    best["index"] = *grid.best;
    doc["best"] = std::move(best);
  } else {
    doc["best"] = nullptr;
  }
  return doc;
}

std::string to_table(const SweepGrid& grid) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& a : grid.axes) out << a.name << '\t';
  out << "fm_mean\tfm_std\tvalid\n";
  for (const auto& cell : grid.cells) {
    for (double v : cell.point) out << v << '\t';
    out << cell.fm_mean << '\t' << cell.fm_std << '\t' << (cell.valid ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace rclust
