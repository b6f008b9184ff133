#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rclust/clustering.hpp"
#include "rclust/error.hpp"
#include "rclust/fusion.hpp"
#include "rclust/preprocess.hpp"
#include "rclust/random.hpp"

using namespace rclust;
using V = std::vector<std::size_t>;

namespace {

ChainEnergy three_frame(double per_edge) {
  ChainEnergy c;
  c.unary = LabelTable(3, 2);
  c.unary.values = {0, 1, 1, 0, 0, 1};
  c.radius = 1;
  c.edge = {per_edge, per_edge, 0.0};
  return c;
}

EnergyModel random_model(Rng& rng, std::size_t frames, std::size_t labels, std::size_t radius) {
  EnergyModel m;
  m.candidates = Segmentation({0}, frames, SegSource::Rcluster);
  m.u_ac = LabelTable(frames, labels);
  m.u_adw = LabelTable(frames, labels);
  for (auto& v : m.u_ac.values) v = rng.uniform();
  for (auto& v : m.u_adw.values) v = rng.uniform();
  m.radius = radius;
  m.similarity.assign(frames * radius, 0.0);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t d = 1; d <= radius && i + d < frames; ++d)
      m.similarity[i * radius + d - 1] = rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("candidate labels are the union split") {
  Segmentation ac({0, 5}, 12, SegSource::Ac), adw({0, 9}, 12, SegSource::Adwin);
  auto c = candidate_labels(ac, adw);
  CHECK(c.boundaries() == V{0, 5, 9});
  CHECK(c.num_segments() == 3);
  CHECK(candidate_labels(ac, ac).boundaries() == ac.boundaries());
  CHECK(candidate_labels(ac, Segmentation({0}, 12, SegSource::Adwin)).boundaries() == V{0, 5});
  CHECK_THROWS_AS(candidate_labels(ac, Segmentation({0}, 11, SegSource::Adwin)), Error);
}

TEST_CASE("unary table decision rule") {
  // Six 2-D frames; candidates [0,2,4]; method segmentation [0,4].
  FeatureStream x(6, 2, {1, 0, 1, 0, 0, 1, 1, 1, 1, 0, 0, 1});
  Segmentation cand({0, 2, 4}, 6, SegSource::Rcluster);
  Segmentation method({0, 4}, 6, SegSource::Ac);
  auto u = unary_table(x, cand, method);
  REQUIRE(u.frames == 6);
  REQUIRE(u.labels == 3);
  // Centroids: c0 = [1,0], c1 = [0.5,1], c2 = [0.5,0.5].
  const double cos01 = 0.5 / std::sqrt(1.25);           // [1,0] . c1
  const double cos11 = 1.0 / std::sqrt(1.25);           // [0,1] . c1
  const double cos_diag = 1.5 / std::sqrt(2.0 * 1.25);  // [1,1] . c1
  const double h = std::sqrt(0.5);                      // [1,0] . c2, [0,1] . c2
  std::vector<double> want = {
      0, (1 - cos01) / 2, 1,        //
      0, (1 - cos01) / 2, 1,        //
      0.5, (1 - cos11) / 2, 1,      // [0,1] against c0 = [1,0]
      0.5 * (1 - 1 / std::sqrt(2.0)), (1 - cos_diag) / 2, 1,
      1, 1, (1 - h) / 2,            //
      1, 1, (1 - h) / 2,
  };
  for (std::size_t k = 0; k < want.size(); ++k) {
    CAPTURE(k);
    CHECK(u.values[k] == doctest::Approx(want[k]).epsilon(1e-9));
  }
  for (double v : u.values) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("pairwise weight examples") {
  FeatureStream xn(5, 2, {1, 0, 1, 0, 0, 1, 1, 1, 0, 0});
  CHECK(pairwise_weight(xn, 0, 1) == doctest::Approx(1.0));
  CHECK(pairwise_weight(xn, 1, 2) == doctest::Approx(0.0));
  CHECK(pairwise_weight(xn, 2, 3) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(pairwise_weight(xn, 4, 4) == 1.0);
  CHECK(pairwise_weight(xn, 3, 4) == 0.0);
}

TEST_CASE("three-frame chains") {
  auto c = three_frame(0.3);
  auto best = solve_chain(c);
  CHECK(best == V{0, 1, 0});
  CHECK(chain_energy(best, c) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(oracle::enumerate_min(c).energy == doctest::Approx(0.6).epsilon(1e-12));

  auto heavy = three_frame(2.0);
  auto smooth = solve_chain(heavy);
  CHECK(smooth == V{0, 0, 0});
  CHECK(chain_energy(smooth, heavy) == doctest::Approx(1.0).epsilon(1e-12));

  // The 0.3 instance through the full model: s = 0.4, omega2 = 0.5 and
  // the 1/|N| weights of a 3-frame chain give 0.3 per edge.
  EnergyModel m;
  m.candidates = Segmentation({0, 1}, 3, SegSource::Rcluster);
  m.u_ac = LabelTable(3, 2);
  m.u_adw = c.unary;
  m.radius = 1;
  m.similarity = {0.4, 0.4, 0.0};
  GcConfig cfg;
  CHECK(solve_chain(m, cfg) == V{0, 1, 0});
  CHECK(total_energy(V{0, 1, 0}, m, cfg) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("energy terms switch off as expected") {
  Rng rng(17);
  auto m = random_model(rng, 8, 3, 2);
  V lab{0, 1, 2, 2, 1, 0, 0, 1};
  GcConfig cfg;
  cfg.radius = 2;
  cfg.omega2 = 0.0;
  for (double w1 : {0.0, 0.3, 1.0}) {
    cfg.omega1 = w1;
    double want = 0;
    for (std::size_t i = 0; i < 8; ++i) want += (1 - w1) * m.u_ac(i, lab[i]) + w1 * m.u_adw(i, lab[i]);
    CHECK(total_energy(lab, m, cfg) == doctest::Approx(want).epsilon(1e-12));
  }
  cfg.omega1 = 0.0;
  cfg.omega2 = 0.7;
  double unary = 0;
  for (std::size_t i = 0; i < 8; ++i) unary += m.u_ac(i, lab[i]);
  CHECK(total_energy(lab, m, cfg) > unary);
  CHECK_THROWS_AS(total_energy(V{0, 1, 2, 3, 0, 0, 0, 0}, m, cfg), Error);
}

TEST_CASE("per-frame and per-edge energy loops agree") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t frames = 1 + rng.uniform_index(12);
    std::size_t labels = 1 + rng.uniform_index(4);
    std::size_t radius = 1 + rng.uniform_index(3);
    auto m = random_model(rng, frames, labels, radius);
    GcConfig cfg{rng.uniform(), rng.uniform(), radius};
    V lab(frames);
    for (auto& l : lab) l = rng.uniform_index(labels);
    CHECK(total_energy(lab, m, cfg) ==
          doctest::Approx(chain_energy(lab, to_chain(m, cfg))).epsilon(1e-12));
  }
}

TEST_CASE("solver is optimal against enumeration") {
  Rng rng(31337);
  for (int trial = 0; trial < 150; ++trial) {
    std::size_t frames = 1 + rng.uniform_index(8);
    std::size_t labels = 1 + rng.uniform_index(4);
    std::size_t radius = trial < 100 ? 1 : 1 + rng.uniform_index(3);
    auto c = oracle::random_chain(rng, frames, labels, radius);
    auto got = solve_chain(c);
    auto want = oracle::enumerate_min(c);
    CHECK(std::abs(chain_energy(got, c) - want.energy) < 1e-9);
    CHECK(got == want.labeling);
  }
}

TEST_CASE("solver ties go to the lexicographically smallest labeling") {
  ChainEnergy c;
  c.unary = LabelTable(4, 3, 0.5);
  c.radius = 1;
  c.edge.assign(4, 0.1);
  CHECK(solve_chain(c) == V{0, 0, 0, 0});
  c.unary(2, 2) = 0.0;
  c.edge = {0.0, 0.0, 0.0, 0.0};
  CHECK(solve_chain(c) == V{0, 0, 2, 0});
}

TEST_CASE("single label and guard") {
  ChainEnergy c;
  c.unary = LabelTable(5, 1);
  c.unary.values = {0.1, 0.2, 0.3, 0.4, 0.5};
  c.edge.assign(5, 1.0);
  auto l = solve_chain(c);
  CHECK(l == V(5, 0));
  CHECK(chain_energy(l, c) == doctest::Approx(1.5));

  ChainEnergy big;
  big.unary = LabelTable(3, 1001);
  big.radius = 2;
  big.edge.assign(6, 0.0);
  try {
    solve_chain(big);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Compute);
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
}

TEST_CASE("rcluster fixpoint and pairwise-off reduction") {
  Rng rng(12);
  std::vector<double> v(40 * 3);
  for (auto& x : v) x = rng.uniform() + 0.1;
  FeatureStream x(40, 3, v);
  auto xn = minmax_normalize(x);
  Segmentation one({0}, 40, SegSource::Ac);
  CHECK(rcluster(x, xn, one, Segmentation({0}, 40, SegSource::Adwin), {}).boundaries() == V{0});

  Segmentation ac({0, 5, 9, 17, 22, 30}, 40, SegSource::Ac);
  Segmentation adw({0, 17, 31}, 40, SegSource::Adwin);
  for (double w1 : {0.0, 0.4, 1.0}) {
    GcConfig cfg{w1, 0.0, 1};
    auto res = rcluster_full(x, xn, ac, adw, cfg);
    V argmin(40);
    for (std::size_t i = 0; i < 40; ++i) {
      double best = 2.0;
      for (std::size_t l = 0; l < res.model.num_labels(); ++l) {
        double u = (1 - w1) * res.model.u_ac(i, l) + w1 * res.model.u_adw(i, l);
        if (u < best) {
          best = u;
          argmin[i] = l;
        }
      }
    }
    CHECK(res.labels == argmin);
    CHECK(res.segmentation == labels_to_segments(argmin, SegSource::Rcluster));
  }
}

TEST_CASE("larger omega2 never adds segments") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> v(60 * 4);
    for (auto& x : v) x = rng.uniform();
    FeatureStream x(60, 4, v);
    auto xn = minmax_normalize(x);
    V b{0};
    for (std::size_t i = 1; i < 60; ++i)
      if (rng.uniform() < 0.15) b.push_back(i);
    Segmentation ac(b, 60, SegSource::Ac);
    Segmentation adw({0, 20, 40}, 60, SegSource::Adwin);
    for (double w1 : {0.0, 0.5, 1.0}) {
      std::size_t prev = 61;
      for (double w2 = 0.0; w2 <= 1.0 + 1e-9; w2 += 0.1) {
        auto n = rcluster(x, xn, ac, adw, {w1, w2, 1}).num_segments();
        CHECK(n <= prev);
        prev = n;
      }
    }
  }
}

TEST_CASE("constructed three-event stream is regularized") {
  // Events: frames 0-3, 4-7, 8-11. AC splits the middle event into three
  // pieces; ADWIN finds the two true boundaries.
  std::vector<double> v = {
      1, 0.00, 0, 1, 0.02, 0, 1, 0.01, 0, 1, 0.03, 0,  //
      0, 1, 0.10, 0, 1, 0.14, 0, 1, 0.06, 0, 1, 0.05,  //
      0, 0, 1, 0.02, 0, 1, 0.01, 0, 1, 0.00, 0, 1,     //
  };
  FeatureStream x(12, 3, v);
  auto xn = minmax_normalize(x);
  Segmentation ac({0, 4, 5, 6, 8}, 12, SegSource::Ac);
  Segmentation adw({0, 4, 8}, 12, SegSource::Adwin);

  CHECK(rcluster(x, xn, ac, adw, {1.0, 0.0, 1}).num_segments() == 5);
  for (double w2 : {0.3, 0.5, 0.7}) {
    GcConfig cfg{1.0, w2, 1};
    auto res = rcluster_full(x, xn, ac, adw, cfg);
    CHECK(res.segmentation.boundaries() == V{0, 4, 8});

    // Enumerate every labeling whose frames take labels with finite support
    // in their ADWIN event; any other label costs the maximal unary 1.
    auto chain = to_chain(res.model, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < 81; ++code) {
      V lab{0, 0, 0, 0, 0, 0, 0, 0, 4, 4, 4, 4};
      std::size_t c = code;
      for (std::size_t i = 4; i < 8; ++i, c /= 3) lab[i] = 1 + c % 3;
      best = std::min(best, chain_energy(lab, chain));
    }
    CHECK(res.energy <= best + 1e-12);
  }
}
