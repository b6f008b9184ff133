#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rclust/clustering.hpp"
#include "rclust/error.hpp"
#include "rclust/random.hpp"

using namespace rclust;

namespace {

FeatureStream random_stream(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<double> v(n * d);
  for (auto& x : v) x = rng.normal();
  return FeatureStream(n, d, std::move(v));
}

FeatureStream blobs(Rng& rng, const std::vector<std::vector<double>>& centers, std::size_t per,
                    double sigma) {
  std::vector<double> v;
  for (const auto& c : centers)
    for (std::size_t i = 0; i < per; ++i)
      for (double m : c) v.push_back(m + sigma * rng.normal());
  return FeatureStream(centers.size() * per, centers[0].size(), std::move(v));
}

}  // namespace

TEST_CASE("cosine distance matrix") {
  FeatureStream x(3, 2, {1, 0, 0, 1, 1, 1});
  auto d = cosine_distance_matrix(x);
  CHECK(d[0] == 0.0);
  CHECK(d[0 * 3 + 1] == doctest::Approx(1.0));
  CHECK(d[0 * 3 + 2] == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(d[0 * 3 + 2] == doctest::Approx(0.29289).epsilon(1e-4));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(d[i * 3 + j] == d[j * 3 + i]);

  try {
    cosine_distance_matrix(FeatureStream(2, 2, {1, 0, 0, 0}));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("hand dendrogram on {0, 1, 10}") {
  FeatureStream x(3, 1, {0, 1, 10});
  AcConfig cfg;
  cfg.linkage = Linkage::Single;
  cfg.metric = Metric::Euclidean;
  auto d = linkage(x, cfg);
  REQUIRE(d.merges.size() == 2);
  CHECK(d.merges[0].a == 0);
  CHECK(d.merges[0].b == 1);
  CHECK(d.merges[0].height == doctest::Approx(1.0));
  CHECK(d.merges[1].a == 2);
  CHECK(d.merges[1].b == 3);
  CHECK(d.merges[1].height == doctest::Approx(9.0));
  CHECK(d.merges[1].size == 3);

  CHECK(cut_dendrogram(d, 5.0) == std::vector<std::size_t>{0, 0, 1});
  CHECK(cut_dendrogram(d, 0.0) == std::vector<std::size_t>{0, 1, 2});
  CHECK(cut_dendrogram(d, 9.0) == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("two frames merge once at their distance for every linkage") {
  FeatureStream x(2, 2, {0, 0, 3, 4});
  for (auto l : kAllLinkages) {
    AcConfig cfg;
    cfg.linkage = l;
    cfg.metric = Metric::Euclidean;
    auto d = linkage(x, cfg);
    REQUIRE(d.merges.size() == 1);
    CHECK(d.merges[0].height == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("every linkage matches the recompute-from-scratch oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    auto x = random_stream(rng, 30, 6);
    for (auto metric : {Metric::Euclidean, Metric::Cosine})
      for (auto l : kAllLinkages) {
        CAPTURE(to_string(l));
        CAPTURE(to_string(metric));
        AcConfig cfg;
        cfg.linkage = l;
        cfg.metric = metric;
        auto got = linkage(x, cfg);
        auto want = oracle::naive_linkage(x, l, metric);
        REQUIRE(got.merges.size() == want.merges.size());
        for (std::size_t s = 0; s < got.merges.size(); ++s) {
          CHECK(got.merges[s].a == want.merges[s].a);
          CHECK(got.merges[s].b == want.merges[s].b);
          CHECK(std::abs(got.merges[s].height - want.merges[s].height) < 1e-9);
          CHECK(got.merges[s].size == want.merges[s].size);
        }
        if (is_monotone(l))
          for (std::size_t s = 1; s < got.merges.size(); ++s)
            CHECK(got.merges[s].height >= got.merges[s - 1].height - 1e-12);
      }
  }
}

TEST_CASE("ties merge the lexicographically smallest pair") {
  // Equally spaced points: every adjacent pair is at distance 1.
  FeatureStream x(4, 1, {0, 1, 2, 3});
  AcConfig cfg;
  cfg.linkage = Linkage::Single;
  cfg.metric = Metric::Euclidean;
  auto d = linkage(x, cfg);
  CHECK(d.merges[0].a == 0);
  CHECK(d.merges[0].b == 1);
  CHECK(d.merges[1].a == 2);
  CHECK(d.merges[1].b == 4);
  CHECK(d.merges[2].a == 3);
  CHECK(d.merges[2].b == 5);
}

TEST_CASE("serial and OpenMP distance backends give the same dendrogram") {
  Rng rng(5);
  auto x = random_stream(rng, 40, 5);
  for (auto l : kAllLinkages) {
    AcConfig a, b;
    a.linkage = b.linkage = l;
    a.backend = kernels::Backend::Serial;
    b.backend = kernels::Backend::OpenMP;
    auto da = linkage(x, a), db = linkage(x, b);
    for (std::size_t s = 0; s < da.merges.size(); ++s) {
      CHECK(da.merges[s].a == db.merges[s].a);
      CHECK(da.merges[s].b == db.merges[s].b);
      CHECK(da.merges[s].height == db.merges[s].height);
    }
  }
}

TEST_CASE("cluster count is non-increasing in the cut") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_stream(rng, 25, 4);
    for (auto l : kAllLinkages) {
      AcConfig cfg;
      cfg.linkage = l;
      auto d = linkage(x, cfg);
      double top = 0;
      for (const auto& m : d.merges) top = std::max(top, m.height);
      std::size_t prev = x.length() + 1;
      for (double cut = 0.0; cut <= top + 0.05; cut += 0.05) {
        auto labels = cut_dendrogram(d, cut);
        std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
        CHECK(k <= prev);
        prev = k;
      }
      CHECK(prev == 1);
    }
  }
}

TEST_CASE("labels_to_segments run-length examples") {
  using V = std::vector<std::size_t>;
  CHECK(labels_to_segments(V{0, 0, 1, 1, 0}, SegSource::Ac).boundaries() == V{0, 2, 4});
  CHECK(labels_to_segments(V{0, 0, 0}, SegSource::Ac).boundaries() == V{0});
  CHECK(labels_to_segments(V{0, 1, 0, 1}, SegSource::Ac).boundaries() == V{0, 1, 2, 3});
  CHECK(labels_to_segments(V{4, 4}, SegSource::Kmeans).source() == SegSource::Kmeans);
  CHECK(canonical_labels(V{7, 7, 2, 9, 2}) == V{0, 0, 1, 2, 1});
}

TEST_CASE("ac_segment temporalizes the flat clusters") {
  FeatureStream x(6, 2, {1, 0, 1, 0.01, 0, 1, 0.01, 1, 1, 0, 1, 0.02});
  AcConfig cfg;
  cfg.cut = 0.1;
  auto seg = ac_segment(x, cfg);
  CHECK(seg.boundaries() == std::vector<std::size_t>{0, 2, 4});
  CHECK(seg.source() == SegSource::Ac);
}

TEST_CASE("parse names") {
  for (auto l : kAllLinkages) CHECK(parse_linkage(to_string(l)) == l);
  CHECK(parse_metric("cosine") == Metric::Cosine);
  CHECK_THROWS_AS(parse_linkage("centroids"), Error);
  AcConfig cfg;
  cfg.cut = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

namespace {

double two_partition_objective(const FeatureStream& x, const std::vector<std::size_t>& lab) {
  double total = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> m(x.dim(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.length(); ++i)
      if (lab[i] == c) {
        ++n;
        for (std::size_t j = 0; j < x.dim(); ++j) m[j] += x.at(i, j);
      }
    if (n == 0) return std::numeric_limits<double>::infinity();
    for (auto& v : m) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < x.length(); ++i)
      if (lab[i] == c)
        for (std::size_t j = 0; j < x.dim(); ++j) total += std::pow(x.at(i, j) - m[j], 2);
  }
  return total;
}

}  // namespace

TEST_CASE("kmeans") {
  Rng rng(3);
  auto x = blobs(rng, {{0, 0}, {10, 10}}, 6, 0.1);
  BaselineConfig cfg;
  cfg.kmeans_k = 1;
  auto one = kmeans(x, cfg);
  CHECK(std::all_of(one.begin(), one.end(), [](auto l) { return l == 0; }));

  cfg.kmeans_k = 2;
  auto two = kmeans(x, cfg);
  // Exhaustive search over every 2-partition of the 12 points.
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> arg;
  for (std::uint32_t mask = 1; mask < (1u << 11); ++mask) {
    std::vector<std::size_t> lab(12, 0);
    for (std::size_t i = 0; i < 11; ++i) lab[i + 1] = (mask >> i) & 1u;
    double obj = two_partition_objective(x, lab);
    if (obj < best) {
      best = obj;
      arg = lab;
    }
  }
  CHECK(canonical_labels(two) == canonical_labels(arg));
  CHECK(canonical_labels(two) == std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  CHECK(kmeans(x, cfg) == two);

  cfg.kmeans_k = 13;
  CHECK_THROWS_AS(kmeans(x, cfg), Error);
}

TEST_CASE("meanshift") {
  Rng rng(4);
  BaselineConfig cfg;
  cfg.meanshift_bandwidth = 5.0;
  auto one = blobs(rng, {{1, 1}}, 10, 0.1);
  auto l1 = meanshift(one, cfg);
  CHECK(std::all_of(l1.begin(), l1.end(), [](auto l) { return l == 0; }));

  cfg.meanshift_bandwidth = 1.0;
  auto two = blobs(rng, {{0, 0}, {20, 0}}, 5, 0.1);
  auto l2 = meanshift(two, cfg);
  CHECK(l2 == std::vector<std::size_t>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});

  BaselineConfig serial = cfg;
  serial.backend = kernels::Backend::Serial;
  auto x = random_stream(rng, 60, 3);
  CHECK(meanshift(x, serial) == meanshift(x, cfg));

  cfg.meanshift_bandwidth = 0.0;
  CHECK_THROWS_AS(meanshift(two, cfg), Error);
}
