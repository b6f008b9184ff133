#include "rclust/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rclust/clustering.hpp"
#include "rclust/error.hpp"

namespace rclust {

namespace {
constexpr double kMaxStates = 1e6;
constexpr double kMaxTable = 5e7;
}  // namespace

void GcConfig::validate() const {
  if (!(omega1 >= 0.0 && omega1 <= 1.0)) throw Error(ErrorKind::Usage, "omega1 must be in [0, 1]");
  if (!(omega2 >= 0.0 && omega2 <= 1.0)) throw Error(ErrorKind::Usage, "omega2 must be in [0, 1]");
  if (radius < 1) throw Error(ErrorKind::Usage, "radius must be >= 1");
}

Segmentation candidate_labels(const Segmentation& seg_ac, const Segmentation& seg_adwin) {
  if (seg_ac.num_frames() != seg_adwin.num_frames()) {
    throw Error(ErrorKind::Data, "segmentations cover different lengths (" +
                                     std::to_string(seg_ac.num_frames()) + " vs " +
                                     std::to_string(seg_adwin.num_frames()) + ")");
  }
  std::vector<std::size_t> merged;
  std::set_union(seg_ac.boundaries().begin(), seg_ac.boundaries().end(),
                 seg_adwin.boundaries().begin(), seg_adwin.boundaries().end(),
                 std::back_inserter(merged));
  return Segmentation(std::move(merged), seg_ac.num_frames(), SegSource::Rcluster);
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

LabelTable unary_table(const FeatureStream& x, const Segmentation& candidates,
                       const Segmentation& method_seg) {
  const std::size_t frames = x.length();
  if (candidates.num_frames() != frames || method_seg.num_frames() != frames)
    throw Error(ErrorKind::Data, "unary_table: segmentation length differs from stream");
  const std::size_t labels = candidates.num_segments();
  const std::size_t dim = x.dim();

  std::vector<double> centroids(labels * dim, 0.0);
  std::vector<std::size_t> owner(labels);  // method segment holding the candidate, or npos
  constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  for (std::size_t l = 0; l < labels; ++l) {
    const std::size_t first = candidates.boundaries()[l];
    const std::size_t last = candidates.segment_end(l);
    for (std::size_t i = first; i <= last; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) centroids[l * dim + j] += r[j];
    }
    for (std::size_t j = 0; j < dim; ++j)
      centroids[l * dim + j] /= static_cast<double>(last - first + 1);
    auto seg = method_seg.segment_of(first);
    owner[l] = seg == method_seg.segment_of(last) ? seg : npos;
  }

  LabelTable table(frames, labels, 1.0);
  const auto n = static_cast<std::ptrdiff_t>(frames);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t seg = method_seg.segment_of(i);
    for (std::size_t l = 0; l < labels; ++l) {
      if (owner[l] != seg) continue;
      double c = cosine(x.row(i), std::span<const double>(centroids.data() + l * dim, dim));
      table(i, l) = std::clamp(0.5 * (1.0 - c), 0.0, 1.0);
    }
  }
  return table;
}

double pairwise_weight(const FeatureStream& xn, std::size_t i, std::size_t n) {
  auto a = xn.row(i);
  auto b = xn.row(n);
  bool za = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
  bool zb = std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; });
  if (za || zb) return za && zb ? 1.0 : 0.0;
  return std::clamp(cosine(a, b), 0.0, 1.0);
}

EnergyModel build_energy(const FeatureStream& x_unary, const FeatureStream& x_pair,
                         const Segmentation& seg_ac, const Segmentation& seg_adwin,
                         std::size_t radius) {
  const std::size_t frames = x_unary.length();
  if (x_pair.length() != frames || seg_ac.num_frames() != frames ||
      seg_adwin.num_frames() != frames) {
    throw Error(ErrorKind::Data, "R-Clustering inputs disagree on the number of frames");
  }
  if (radius < 1) throw Error(ErrorKind::Usage, "radius must be >= 1");
  EnergyModel model;
  model.candidates = candidate_labels(seg_ac, seg_adwin);
  model.u_ac = unary_table(x_unary, model.candidates, seg_ac);
  model.u_adw = unary_table(x_unary, model.candidates, seg_adwin);
  model.radius = radius;
  model.similarity.assign(frames * radius, 0.0);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t d = 1; d <= radius && i + d < frames; ++d)
      model.similarity[i * radius + d - 1] = pairwise_weight(x_pair, i, i + d);
  return model;
}

std::size_t neighbour_count(std::size_t i, std::size_t frames, std::size_t radius) {
  std::size_t left = std::min(i, radius);
  std::size_t right = std::min(frames - 1 - i, radius);
  return left + right;
}

ChainEnergy to_chain(const EnergyModel& model, const GcConfig& cfg) {
  cfg.validate();
  if (cfg.radius != model.radius)
    throw Error(ErrorKind::Usage, "GC radius differs from the energy model's radius");
  const std::size_t frames = model.frames();
  ChainEnergy chain;
  chain.unary = LabelTable(frames, model.num_labels());
  for (std::size_t k = 0; k < chain.unary.values.size(); ++k)
    chain.unary.values[k] = (1.0 - cfg.omega1) * model.u_ac.values[k] + cfg.omega1 * model.u_adw.values[k];
  chain.radius = model.radius;
  chain.edge.assign(frames * model.radius, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t d = 1; d <= model.radius && i + d < frames; ++d) {
      // The pair appears once in frame i's neighbourhood and once in frame i+d's.
      double norm = 1.0 / static_cast<double>(neighbour_count(i, frames, model.radius)) +
                    1.0 / static_cast<double>(neighbour_count(i + d, frames, model.radius));
      chain.edge[i * model.radius + d - 1] = cfg.omega2 * model.s(i, d) * norm;
    }
  }
  return chain;
}

double chain_energy(std::span<const std::size_t> labeling, const ChainEnergy& chain) {
  const std::size_t frames = chain.unary.frames;
  if (labeling.size() != frames) throw Error(ErrorKind::Data, "labeling length mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    if (labeling[i] >= chain.unary.labels)
      throw Error(ErrorKind::Data, "unknown label " + std::to_string(labeling[i]) + " at frame " + std::to_string(i));
    e += chain.unary(i, labeling[i]);
  }
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t d = 1; d <= chain.radius && i + d < frames; ++d)
      if (labeling[i] != labeling[i + d]) e += chain.pair_cost(i, d);
  return e;
}

double total_energy(std::span<const std::size_t> labeling, const EnergyModel& model,
                    const GcConfig& cfg) {
  cfg.validate();
  const std::size_t frames = model.frames();
  if (labeling.size() != frames) throw Error(ErrorKind::Data, "labeling length mismatch");
  double unary = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t l = labeling[i];
    if (l >= model.num_labels())
      throw Error(ErrorKind::Data, "unknown label " + std::to_string(l) + " at frame " + std::to_string(i));
    unary += (1.0 - cfg.omega1) * model.u_ac(i, l) + cfg.omega1 * model.u_adw(i, l);
  }
  // Per-frame sum over its own neighbourhood, normalized by |N_i|.
  double pairwise = 0.0;
  const std::size_t r = model.radius;
  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t count = neighbour_count(i, frames, r);
    if (count == 0) continue;
    double local = 0.0;
    for (std::size_t d = 1; d <= r; ++d) {
      if (i >= d && labeling[i] != labeling[i - d]) local += model.s(i - d, d);
      if (i + d < frames && labeling[i] != labeling[i + d]) local += model.s(i, d);
    }
    pairwise += local / static_cast<double>(count);
  }
  return unary + cfg.omega2 * pairwise;
}

namespace {

std::vector<std::size_t> solve_radius1(const ChainEnergy& chain) {
  const std::size_t frames = chain.unary.frames;
  const std::size_t labels = chain.unary.labels;
  // value[t][l]: optimal cost of frames t+1.. given label l at frame t.
  std::vector<double> value(frames * labels, 0.0);
  for (std::size_t t = frames - 1; t-- > 0;) {
    const double w = chain.pair_cost(t, 1);
    double best_any = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < labels; ++l)
      best_any = std::min(best_any, chain.unary(t + 1, l) + value[(t + 1) * labels + l]);
    for (std::size_t l = 0; l < labels; ++l) {
      double stay = chain.unary(t + 1, l) + value[(t + 1) * labels + l];
      value[t * labels + l] = std::min(stay, w + best_any);
    }
  }
  std::vector<std::size_t> out(frames);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < labels; ++l) best = std::min(best, chain.unary(0, l) + value[l]);
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  for (std::size_t l = 0; l < labels; ++l) {
    if (chain.unary(0, l) + value[l] <= best + tol) {
      out[0] = l;
      break;
    }
  }
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    const double target = value[t * labels + out[t]];
    const double w = chain.pair_cost(t, 1);
    for (std::size_t l = 0; l < labels; ++l) {
      double c = chain.unary(t + 1, l) + value[(t + 1) * labels + l] + (l != out[t] ? w : 0.0);
      if (c <= target + tol) {
        out[t + 1] = l;
        break;
      }
    }
  }
  return out;
}

// States encode the last min(t+1, r) labels, most recent in the lowest digit.
std::vector<std::size_t> solve_general(const ChainEnergy& chain) {
  const std::size_t frames = chain.unary.frames;
  const std::size_t labels = chain.unary.labels;
  const std::size_t r = chain.radius;

  std::vector<std::size_t> hist_len(frames), states(frames);
  std::size_t full = 1;
  for (std::size_t d = 0; d < r; ++d) full *= labels;
  for (std::size_t t = 0; t < frames; ++t) {
    hist_len[t] = std::min(t + 1, r);
    std::size_t s = 1;
    for (std::size_t d = 0; d < hist_len[t]; ++d) s *= labels;
    states[t] = s;
  }
  std::vector<std::vector<double>> value(frames);
  value[frames - 1].assign(states[frames - 1], 0.0);

  auto step_cost = [&](std::size_t t, std::size_t code, std::size_t l) {
    // Cost of frame t+1 taking label l after history `code` at frame t.
    double c = chain.unary(t + 1, l);
    std::size_t h = code;
    for (std::size_t d = 1; d <= hist_len[t]; ++d) {
      std::size_t prev = h % labels;
      h /= labels;
      if (prev != l) c += chain.pair_cost(t + 1 - d, d);
    }
    return c;
  };
  auto next_code = [&](std::size_t t, std::size_t code, std::size_t l) {
    std::size_t shifted = code * labels + l;
    return hist_len[t] == r ? shifted % full : shifted;
  };

  for (std::size_t t = frames - 1; t-- > 0;) {
    value[t].assign(states[t], std::numeric_limits<double>::infinity());
    for (std::size_t code = 0; code < states[t]; ++code) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < labels; ++l)
        best = std::min(best, step_cost(t, code, l) + value[t + 1][next_code(t, code, l)]);
      value[t][code] = best;
    }
  }

  std::vector<std::size_t> out(frames);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < labels; ++l) best = std::min(best, chain.unary(0, l) + value[0][l]);
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::size_t code = 0;
  for (std::size_t l = 0; l < labels; ++l) {
    if (chain.unary(0, l) + value[0][l] <= best + tol) {
      out[0] = l;
      code = l;
      break;
    }
  }
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    const double target = value[t][code];
    for (std::size_t l = 0; l < labels; ++l) {
      std::size_t nc = next_code(t, code, l);
      if (step_cost(t, code, l) + value[t + 1][nc] <= target + tol) {
        out[t + 1] = l;
        code = nc;
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> solve_chain(const ChainEnergy& chain) {
  const std::size_t frames = chain.unary.frames;
  const std::size_t labels = chain.unary.labels;
  if (frames == 0 || labels == 0) throw Error(ErrorKind::Data, "empty energy model");
  if (chain.radius < 1) throw Error(ErrorKind::Usage, "radius must be >= 1");
  if (chain.edge.size() != frames * chain.radius)
    throw Error(ErrorKind::Data, "edge table size mismatch");
  const double state_space = std::pow(static_cast<double>(labels), static_cast<double>(chain.radius));
  if (state_space > kMaxStates || state_space * static_cast<double>(frames) > kMaxTable) {
    throw Error(ErrorKind::Compute,
                "chain state space too large (" + std::to_string(labels) + " labels, radius " +
                    std::to_string(chain.radius) + "); reduce --radius or the number of candidate segments");
  }
  if (labels == 1) return std::vector<std::size_t>(frames, 0);
  return chain.radius == 1 ? solve_radius1(chain) : solve_general(chain);
}

std::vector<std::size_t> solve_chain(const EnergyModel& model, const GcConfig& cfg) {
  return solve_chain(to_chain(model, cfg));
}

RclusterResult rcluster_full(const FeatureStream& x_unary, const FeatureStream& x_pair,
                             const Segmentation& seg_ac, const Segmentation& seg_adwin,
                             const GcConfig& cfg) {
  cfg.validate();
  RclusterResult result;
  result.model = build_energy(x_unary, x_pair, seg_ac, seg_adwin, cfg.radius);
  auto chain = to_chain(result.model, cfg);
  result.labels = solve_chain(chain);
  result.energy = chain_energy(result.labels, chain);
  result.segmentation = labels_to_segments(result.labels, SegSource::Rcluster);
  return result;
}

Segmentation rcluster(const FeatureStream& x_unary, const FeatureStream& x_pair,
                      const Segmentation& seg_ac, const Segmentation& seg_adwin,
                      const GcConfig& cfg) {
  return rcluster_full(x_unary, x_pair, seg_ac, seg_adwin, cfg).segmentation;
}

nlohmann::ordered_json energy_trace(const RclusterResult& result, const GcConfig& cfg) {
  auto chain = to_chain(result.model, cfg);
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["energy"] = result.energy;
  doc["num_labels"] = result.model.num_labels();
  auto frames = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    frames.push_back({{"frame", i},
                      {"label", result.labels[i]},
                      {"unary", chain.unary(i, result.labels[i])}});
  }
  doc["frames"] = std::move(frames);
  auto edges = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    for (std::size_t d = 1; d <= chain.radius && i + d < result.labels.size(); ++d) {
      double cost = result.labels[i] != result.labels[i + d] ? chain.pair_cost(i, d) : 0.0;
      edges.push_back({{"i", i}, {"n", i + d}, {"cost", cost}});
    }
  }
  doc["edges"] = std::move(edges);
  return doc;
}

}  // namespace rclust
