#include "rclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "rclust/error.hpp"
#include "rclust/preprocess.hpp"
#include "rclust/random.hpp"

namespace rclust {

namespace {
constexpr std::pair<Linkage, std::string_view> kLinkageNames[] = {
    {Linkage::Single, "single"},     {Linkage::Centroid, "centroid"}, {Linkage::Average, "average"},
    {Linkage::Weighted, "weighted"}, {Linkage::Complete, "complete"}, {Linkage::Ward, "ward"},
    {Linkage::Median, "median"},
};
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string_view to_string(Linkage linkage) {
  for (auto& [l, name] : kLinkageNames)
    if (l == linkage) return name;
  return "unknown";
}

Linkage parse_linkage(std::string_view text) {
  for (auto& [l, name] : kLinkageNames)
    if (name == text) return l;
  throw Error(ErrorKind::Usage, "unknown linkage '" + std::string(text) + "'");
}

Metric parse_metric(std::string_view text) {
  if (text == "cosine") return Metric::Cosine;
  if (text == "euclidean") return Metric::Euclidean;
  throw Error(ErrorKind::Usage, "unknown metric '" + std::string(text) + "'");
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::Cosine: return "cosine";
    case Metric::Euclidean: return "euclidean";
    case Metric::SqEuclidean: return "sqeuclidean";
  }
  return "unknown";
}

bool is_monotone(Linkage linkage) {
  return linkage != Linkage::Centroid && linkage != Linkage::Median;
}

void AcConfig::validate() const {
  if (!(cut >= 0.0) || !std::isfinite(cut)) throw Error(ErrorKind::Usage, "cut must be >= 0");
  if (metric == Metric::SqEuclidean)
    throw Error(ErrorKind::Usage, "AC metric must be cosine or euclidean");
}

std::vector<double> cosine_distance_matrix(const FeatureStream& x, kernels::Backend backend) {
  return kernels::distance_matrix(x, Metric::Cosine, backend);
}

namespace {

bool squared_geometry(Linkage m) {
  return m == Linkage::Centroid || m == Linkage::Median || m == Linkage::Ward;
}

// Lance-Williams update of d(a u b, k).
inline double lance_williams(Linkage m, double dak, double dbk, double dab, double na, double nb,
                             double nk) {
  switch (m) {
    case Linkage::Single: return std::min(dak, dbk);
    case Linkage::Complete: return std::max(dak, dbk);
    case Linkage::Average: return (na * dak + nb * dbk) / (na + nb);
    case Linkage::Weighted: return 0.5 * (dak + dbk);
    case Linkage::Centroid: {
      double n = na + nb;
      return (na * dak + nb * dbk) / n - na * nb * dab / (n * n);
    }
    case Linkage::Median: return 0.5 * dak + 0.5 * dbk - 0.25 * dab;
    case Linkage::Ward:
      return ((na + nk) * dak + (nb + nk) * dbk - nk * dab) / (na + nb + nk);
  }
  return kInf;
}

}  // namespace

Dendrogram linkage_from_matrix(std::vector<double> dist, std::size_t n, Linkage method) {
  if (n < 2) throw Error(ErrorKind::Data, "linkage needs at least 2 frames");
  if (dist.size() != n * n) throw Error(ErrorKind::Data, "distance matrix size mismatch");

  // Slot i holds the cluster whose smallest frame index is i.
  std::vector<char> active(n, 1);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, kInf);

  auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && D(i, j) < nn_dist[i]) {
        nn_dist[i] = D(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) refresh(i);

  Dendrogram out;
  out.num_leaves = n;
  out.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && nn[i] < n && nn_dist[i] < best) {
        best = nn_dist[i];
        a = i;
      }
    }
    if (a == n) {
      // Only infinite distances remain; fall back to the smallest active pair.
      for (std::size_t i = 0; i < n && a == n; ++i)
        if (active[i]) a = i;
      std::size_t b = a + 1;
      while (!active[b]) ++b;
      nn[a] = b;
      best = D(a, b);
    }
    const std::size_t b = nn[a];
    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);
    const double dab = D(a, b);

    Merge m;
    m.a = std::min(id[a], id[b]);
    m.b = std::max(id[a], id[b]);
    m.height = squared_geometry(method) ? std::sqrt(std::max(dab, 0.0)) : dab;
    m.size = size[a] + size[b];
    out.merges.push_back(m);

    active[b] = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      double v = lance_williams(method, D(a, k), D(b, k), dab, na, nb,
                                static_cast<double>(size[k]));
      D(a, k) = v;
      D(k, a) = v;
    }
    size[a] += size[b];
    id[a] = n + step;

    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || i == a) continue;
      if (nn[i] == a || nn[i] == b) {
        refresh(i);
      } else if (i < a && (D(i, a) < nn_dist[i] || (D(i, a) == nn_dist[i] && a < nn[i]))) {
        nn_dist[i] = D(i, a);
        nn[i] = a;
      }
    }
    refresh(a);
  }
  return out;
}

Dendrogram linkage(const FeatureStream& x, const AcConfig& cfg) {
  cfg.validate();
  if (x.length() < 2) throw Error(ErrorKind::Data, "linkage needs at least 2 frames");
  if (squared_geometry(cfg.linkage)) {
    if (cfg.metric == Metric::Cosine) {
      auto unit = signed_root_l2(x, 1.0);
      for (std::size_t i = 0; i < unit.length(); ++i) {
        bool zero = std::all_of(unit.row(i).begin(), unit.row(i).end(),
                                [](double v) { return v == 0.0; });
        if (zero) throw Error(ErrorKind::Data, "zero-norm feature vector at frame " + x.ids()[i]);
      }
      return linkage_from_matrix(kernels::distance_matrix(unit, Metric::SqEuclidean, cfg.backend),
                                 x.length(), cfg.linkage);
    }
    return linkage_from_matrix(kernels::distance_matrix(x, Metric::SqEuclidean, cfg.backend),
                               x.length(), cfg.linkage);
  }
  return linkage_from_matrix(kernels::distance_matrix(x, cfg.metric, cfg.backend), x.length(),
                             cfg.linkage);
}

std::vector<std::size_t> canonical_labels(std::span<const std::size_t> labels) {
  std::unordered_map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(labels[i], remap.size());
    out[i] = it->second;
  }
  return out;
}

std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendro, double cut) {
  const std::size_t n = dendro.num_leaves;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  // Smallest leaf of every cluster id.
  std::vector<std::size_t> rep(n + dendro.merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), 0);
  for (std::size_t s = 0; s < dendro.merges.size(); ++s) {
    const auto& m = dendro.merges[s];
    rep[n + s] = std::min(rep[m.a], rep[m.b]);
    if (m.height <= cut) {
      auto ra = find(rep[m.a]);
      auto rb = find(rep[m.b]);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  std::vector<std::size_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = find(i);
  return canonical_labels(roots);
}

Segmentation labels_to_segments(std::span<const std::size_t> labels, SegSource source) {
  if (labels.empty()) throw Error(ErrorKind::Data, "no labels to segment");
  return Segmentation(labels_to_boundaries(labels), labels.size(), source);
}

Segmentation ac_segment(const FeatureStream& x, const AcConfig& cfg) {
  if (x.length() == 1) return Segmentation::whole(1, SegSource::Ac);
  auto labels = cut_dendrogram(linkage(x, cfg), cfg.cut);
  return labels_to_segments(labels, SegSource::Ac);
}

// ---------------------------------------------------------------------------
// Baselines

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<std::size_t> kmeans(const FeatureStream& x, const BaselineConfig& cfg) {
  const std::size_t n = x.length();
  const std::size_t dim = x.dim();
  const std::size_t k = cfg.kmeans_k;
  if (k < 1) throw Error(ErrorKind::Usage, "k-means needs k >= 1");
  if (k > n) {
    throw Error(ErrorKind::Usage, "k-means k = " + std::to_string(k) + " exceeds frame count " +
                                      std::to_string(n));
  }
  Rng rng(cfg.kmeans_seed);

  // k-means++ seeding.
  std::vector<double> centers;
  centers.reserve(k * dim);
  std::vector<char> chosen(n, 0);
  auto add_center = [&](std::size_t i) {
    chosen[i] = 1;
    auto r = x.row(i);
    centers.insert(centers.end(), r.begin(), r.end());
  };
  add_center(static_cast<std::size_t>(rng.uniform_index(n)));
  std::vector<double> d2(n, kInf);
  while (centers.size() < k * dim) {
    std::span<const double> last(centers.data() + centers.size() - dim, dim);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), last));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick == n)
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!chosen[i]) pick = i;
    }
    add_center(pick);
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < cfg.kmeans_max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = kInf;
      for (std::size_t c = 0; c < k; ++c) {
        double d = sq_dist(x.row(i), std::span<const double>(centers.data() + c * dim, dim));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i] * dim + j] += r[j];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      for (std::size_t j = 0; j < dim; ++j)
        centers[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
    }
  }
  return canonical_labels(assign);
}

std::vector<std::size_t> meanshift(const FeatureStream& x, const BaselineConfig& cfg) {
  const double bw = cfg.meanshift_bandwidth;
  if (!(bw > 0.0) || !std::isfinite(bw))
    throw Error(ErrorKind::Usage, "mean-shift bandwidth must be > 0");
  const std::size_t dim = x.dim();
  auto modes = kernels::meanshift_modes(x, bw, cfg.meanshift_tolerance, cfg.meanshift_max_iter,
                                        cfg.backend);
  const double merge2 = 0.25 * bw * bw;
  std::vector<std::size_t> reps;  // frame whose mode represents each cluster
  std::vector<std::size_t> labels(x.length());
  for (std::size_t i = 0; i < x.length(); ++i) {
    std::span<const double> mi(modes.data() + i * dim, dim);
    std::size_t label = reps.size();
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if (sq_dist(mi, std::span<const double>(modes.data() + reps[c] * dim, dim)) <= merge2) {
        label = c;
        break;
      }
    }
    if (label == reps.size()) reps.push_back(i);
    labels[i] = label;
  }
  return labels;
}

}  // namespace rclust
