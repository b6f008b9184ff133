#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "rclust/error.hpp"
#include "rclust/random.hpp"
#include "rclust/stream.hpp"

using namespace rclust;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "rclust_tests";
  fs::create_directories(dir);
  return dir / name;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an rclust::Error");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("csv parse keeps row order and shape") {
  auto s = parse_features_csv("1,0\n0,1\n1,1");
  CHECK(s.length() == 3);
  CHECK(s.dim() == 2);
  CHECK(s.at(1, 1) == 1.0);
  CHECK(s.at(2, 0) == 1.0);
  CHECK(s.ids()[0] == "f000000");
  CHECK(s.ids()[2] == "f000002");
}

TEST_CASE("csv header and id column") {
  auto s = parse_features_csv("id,a,b\nimg1,1.5,2\r\nimg2,-3,4e-1\n", {true, true});
  CHECK(s.length() == 2);
  CHECK(s.dim() == 2);
  CHECK(s.ids()[1] == "img2");
  CHECK(s.at(1, 1) == doctest::Approx(0.4));
}

TEST_CASE("csv errors") {
  SUBCASE("ragged row names the row") {
    try {
      parse_features_csv("1,0\n1,0,1\n");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("non-finite value names row and column") {
    try {
      parse_features_csv("1,0\n1,nan\n");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find("row 2, col 2") != std::string::npos);
    }
    CHECK(kind_of([] { parse_features_csv("inf\n"); }) == ErrorKind::Data);
  }
  SUBCASE("empty input") {
    CHECK(kind_of([] { parse_features_csv(""); }) == ErrorKind::Data);
    auto p = temp_path("empty.csv");
    write_text_file(p, "");
    CHECK(kind_of([&] { load_features(p, FeatureFormat::Csv); }) == ErrorKind::Data);
  }
  SUBCASE("missing file names the path") {
    try {
      load_features("/nonexistent/x.csv", FeatureFormat::Csv);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
      CHECK(std::string(e.what()).find("/nonexistent/x.csv") != std::string::npos);
    }
  }
}

TEST_CASE("packed binary round trip is bit exact") {
  Rng rng(3);
  std::vector<double> v(7 * 5);
  for (auto& x : v) x = static_cast<float>(rng.normal() * 100.0);
  FeatureStream s(7, 5, v);
  auto p = temp_path("rt.bin");
  write_features_binary(s, p);
  auto back = load_features(p, FeatureFormat::PackedBinary);
  CHECK(back.length() == 7);
  CHECK(back.dim() == 5);
  CHECK(std::memcmp(back.values().data(), s.values().data(), v.size() * sizeof(double)) == 0);

  auto text = read_text_file(p);
  CHECK(text.substr(0, 4) == "FSTR");
  CHECK(text.size() == 4 + 4 + 8 + 8 + 7 * 5 * 4);
  text[4] = 9;  // version
  write_text_file(p, text);
  CHECK(kind_of([&] { load_features(p, FeatureFormat::PackedBinary); }) == ErrorKind::Format);
}

TEST_CASE("csv writer round trip") {
  FeatureStream s(3, 2, {1, 0, 0, 1, 1, 1});
  auto p = temp_path("rt.csv");
  write_features_csv(s, p);
  CHECK(read_text_file(p) == "1,0\n0,1\n1,1\n");
  CHECK(load_features(p, FeatureFormat::Csv).values() == s.values());
}

TEST_CASE("segmentation documents") {
  SUBCASE("single segment") {
    auto doc = segmentation_to_json(Segmentation({0}, 5, SegSource::Ac));
    CHECK(doc["segments"].size() == 1);
    CHECK(doc["segments"][0]["start"] == 0);
    CHECK(doc["segments"][0]["end"] == 4);
    CHECK(doc["source"] == "ac");
    CHECK(doc["num_frames"] == 5);
    CHECK(doc["version"] == 1);
  }
  SUBCASE("split derivation") {
    auto doc = segmentation_to_json(Segmentation({0, 2}, 4, SegSource::Adwin));
    CHECK(doc["segments"][0]["end"] == 1);
    CHECK(doc["segments"][1]["start"] == 2);
    CHECK(doc["segments"][1]["end"] == 3);
  }
  SUBCASE("write then load") {
    Segmentation seg({0, 3, 9}, 12, SegSource::Rcluster);
    auto p = temp_path("seg.json");
    write_segmentation(seg, p, {{"k", 1}});
    CHECK(load_segmentation(p) == seg);
  }
  SUBCASE("load validations") {
    auto seg_of = [](const char* text) { return segmentation_from_json(nlohmann::json::parse(text)); };
    CHECK(seg_of(R"({"version":1,"source":"ground-truth","num_frames":5,"segments":[{"start":0,"end":4}]})")
              .boundaries() == std::vector<std::size_t>{0});
    CHECK(seg_of(R"({"version":1,"source":"ground-truth","num_frames":4,"segments":[{"start":0,"end":1},{"start":2,"end":3}]})")
              .boundaries() == std::vector<std::size_t>{0, 2});
    auto overlap = R"({"version":1,"source":"ac","num_frames":6,"segments":[{"start":0,"end":3},{"start":2,"end":5}]})";
    try {
      seg_of(overlap);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      CHECK(std::string(e.what()).find("overlap") != std::string::npos);
    }
    CHECK(kind_of([&] { seg_of(R"({"version":1,"source":"ac","num_frames":6,"segments":[{"start":1,"end":5}]})"); }) ==
          ErrorKind::Validation);
    CHECK(kind_of([&] { seg_of(R"({"version":1,"source":"ac","num_frames":6,"segments":[{"start":0,"end":2},{"start":4,"end":5}]})"); }) ==
          ErrorKind::Validation);
    CHECK(kind_of([&] { seg_of(R"({"version":1,"source":"ac","num_frames":9,"segments":[{"start":0,"end":5}]})"); }) ==
          ErrorKind::Validation);
    CHECK(kind_of([&] { seg_of(R"({"version":1,"num_frames":9})"); }) == ErrorKind::Format);
  }
  SUBCASE("constructor invariants") {
    CHECK(kind_of([] { Segmentation({1}, 4, SegSource::Ac); }) == ErrorKind::Validation);
    CHECK(kind_of([] { Segmentation({0, 2, 2}, 4, SegSource::Ac); }) == ErrorKind::Validation);
    CHECK(kind_of([] { Segmentation({0, 4}, 4, SegSource::Ac); }) == ErrorKind::Validation);
  }
}

TEST_CASE("boundaries and labels are inverse (property)") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t frames = 1 + gen() % 60;
    std::vector<std::size_t> b{0};
    for (std::size_t i = 1; i < frames; ++i)
      if (gen() % 4 == 0) b.push_back(i);
    auto labels = boundaries_to_labels(b, frames);
    REQUIRE(labels_to_boundaries(labels) == b);
    Segmentation seg(b, frames, SegSource::Ac);
    for (std::size_t i = 0; i < frames; ++i) REQUIRE(seg.segment_of(i) == labels[i]);
  }
}
