// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "touchpass/capture.hpp"
#include "touchpass/error.hpp"

using namespace touchpass;
using tptest::CodeOf;

namespace {

LoaderOptions NoMinimum() {
  LoaderOptions o;
  o.min_points = 1;
  return o;
}

Dataset GridDataset(int users) {
  std::mt19937_64 rng(5);
  std::vector<DigitSample> samples;
  for (int u = 0; u < users; ++u) {
    for (int d = 0; d < 10; ++d) {
      for (int s = 1; s <= 2; ++s) {
        for (int r = 1; r <= 4; ++r) {
          samples.push_back(MakeSample({"user" + std::to_string(100 + u), d, s, r},
                                       tptest::RandomStroke(rng, 8)));
        }
      }
    }
  }
  return Dataset(std::move(samples));
}

}  // namespace

TEST_SUITE("capture") {
  TEST_CASE("three-row file parses with the minimum disabled") {
    const DigitSample s =
        LoadSample("3\n0 0 0\n1 0 10\n2 0 20\n", {"u", 1, 1, 1}, NoMinimum());
    REQUIRE(s.points.size() == 3);
    CHECK(s.points[0].t == 0.0);
    CHECK(s.points[1].t == 10.0);
    CHECK(s.points[2].t == 20.0);
    CHECK(s.points[2].x == 2.0);
  }

  TEST_CASE("header count mismatch is malformed") {
    CHECK(CodeOf([] {
            LoadSample("5\n0 0 0\n1 0 10\n2 0 20\n3 0 30\n", {"u", 1, 1, 1},
                       NoMinimum());
          }) == ErrorCode::kMalformedFile);
    CHECK(CodeOf([] {
            LoadSample("2\n0 0 zero\n1 0 10\n", {"u", 1, 1, 1}, NoMinimum());
          }) == ErrorCode::kMalformedFile);
  }

  TEST_CASE("repeated timestamp keeps the first point") {
    const DigitSample s = LoadSample(
        "6\n0 0 0\n1 0 10\n5 5 10\n2 0 20\n3 0 30\n4 0 40\n", {"u", 1, 1, 1});
    REQUIRE(s.points.size() == 5);
    CHECK(s.points[1].x == 1.0);
    CHECK(s.points[2].x == 2.0);
  }

  TEST_CASE("short and non-monotonic samples are rejected") {
    CHECK(CodeOf([] {
            LoadSample("3\n0 0 0\n1 0 10\n2 0 20\n", {"u", 1, 1, 1});
          }) == ErrorCode::kTooShort);
    CHECK(CodeOf([] {
            LoadSample("5\n0 0 0\n1 0 10\n2 0 5\n3 0 30\n4 0 40\n",
                       {"u", 1, 1, 1});
          }) == ErrorCode::kNonMonotonicTime);
  }

  TEST_CASE("configurable column order and separators") {
    LoaderOptions o;
    o.count_header = false;
    o.t_column = 0;
    o.x_column = 1;
    o.y_column = 2;
    const DigitSample s =
        LoadSample("0,1,2\n10,2,3\n20,3,4\n30,4,5\n40,5,6\n", {"u", 0, 2, 4}, o);
    REQUIRE(s.points.size() == 5);
    CHECK(s.points[1].x == 2.0);
    CHECK(s.points[1].y == 3.0);
    CHECK(s.points[1].t == 10.0);
  }

  TEST_CASE("serialize then load is exact") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
      const DigitSample s = tptest::RandomSample(rng, 5 + i);
      CHECK(LoadSample(SerializeSample(s), s.key) == s);
    }
  }

  TEST_CASE("file names") {
    SampleKey key;
    REQUIRE(ParseSampleFileName("u_01_7_s2_r3.txt", &key));
    CHECK(key.user_id == "u_01");
    CHECK(key.digit == 7);
    CHECK(key.session == 2);
    CHECK(key.repetition == 3);
    CHECK(SampleFileName(key) == "u_01_7_s2_r3.txt");
    CHECK_FALSE(ParseSampleFileName("u_7_s2.txt", &key));
  }

  TEST_CASE("preprocess examples") {
    const DigitSample s = MakeSample(
        {"u", 1, 1, 1}, {{2, 2, 5}, {4, 4, 15}, {2, 2, 25}, {4, 4, 35}, {3, 3, 45}},
        1);
    const DigitSample p = Preprocess(s);
    CHECK(p.points[0].x == -1.0);
    CHECK(p.points[0].y == -1.0);
    CHECK(p.points[1].x == 1.0);
    CHECK(p.points[4].x == 0.0);
    CHECK(p.points[0].t == 0.0);
    CHECK(p.points[1].t == 10.0);
    CHECK(p.points[2].t == 20.0);

    const DigitSample two =
        MakeSample({"u", 1, 1, 1}, {{2, 2, 0}, {4, 4, 1}}, 1);
    const DigitSample q = Preprocess(two);
    CHECK(q.points[0].x == -1.0);
    CHECK(q.points[1].y == 1.0);
  }

  TEST_CASE("preprocess is idempotent and translation invariant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> shift(-1e3, 1e3);
    for (int i = 0; i < 200; ++i) {
      const DigitSample s = tptest::RandomSample(rng, 5 + i % 60);
      const DigitSample p = Preprocess(s);
      CHECK(Preprocess(p) == p);

      DigitSample moved = s;
      const double dx = shift(rng), dy = shift(rng);
      for (TouchPoint& pt : moved.points) {
        pt.x += dx;
        pt.y += dy;
      }
      const DigitSample pm = Preprocess(moved);
      for (std::size_t k = 0; k < p.points.size(); ++k) {
        CHECK(std::abs(pm.points[k].x - p.points[k].x) <= 1e-9);
        CHECK(std::abs(pm.points[k].y - p.points[k].y) <= 1e-9);
        CHECK(pm.points[k].t == p.points[k].t);
      }
    }
  }

  TEST_CASE("dataset split and duplicates") {
    const Dataset d = GridDataset(5);
    CHECK(d.size() == 400);
    const Dataset small(std::vector<DigitSample>(d.samples()), 3);
    CHECK(small.users(Dataset::Split::kDevelopment).size() == 3);
    CHECK(small.users(Dataset::Split::kEvaluation).size() == 2);
    CHECK(small.users(Dataset::Split::kDevelopment).front() == "user100");

    std::vector<DigitSample> dup = {d.samples()[0], d.samples()[0]};
    CHECK(CodeOf([&] { Dataset bad(dup); }) == ErrorCode::kDuplicateKey);
  }

  TEST_CASE("93-user corpus splits 50/43") {
    const Dataset d = GridDataset(93);
    CHECK(d.size() == 7440);
    CHECK(d.users(Dataset::Split::kDevelopment).size() == 50);
    CHECK(d.users(Dataset::Split::kEvaluation).size() == 43);
  }

  TEST_CASE("dataset write then load round-trips") {
    tptest::TempDir dir("capture");
    const Dataset d(std::vector<DigitSample>(GridDataset(3).samples()), 2);
    WriteDataset(d, dir.path());
    const DatasetLoad load = LoadDataset(dir.path(), {}, 2);
    CHECK(load.skipped.empty());
    CHECK(load.dataset == d);
  }

  TEST_CASE("loader errors and skipped files") {
    tptest::TempDir empty("empty");
    CHECK(CodeOf([&] { LoadDataset(empty.path()); }) == ErrorCode::kEmptyDataset);

    tptest::TempDir dir("dup");
    std::filesystem::create_directories(dir.path() / "a");
    std::filesystem::create_directories(dir.path() / "b");
    const std::string body = "5\n0 0 0\n1 0 10\n2 0 20\n3 1 30\n4 1 40\n";
    std::ofstream(dir.path() / "a" / "x_1_s1_r1.txt") << body;
    std::ofstream(dir.path() / "b" / "x_1_s1_r1.txt") << body;
    CHECK(CodeOf([&] { LoadDataset(dir.path()); }) == ErrorCode::kDuplicateKey);

    tptest::TempDir mixed("mixed");
    std::filesystem::create_directories(mixed.path() / "x");
    std::ofstream(mixed.path() / "x" / "x_1_s1_r1.txt") << body;
    std::ofstream(mixed.path() / "x" / "x_1_s1_r2.txt") << "9\n1 2 3\n";
    const DatasetLoad load = LoadDataset(mixed.path());
    CHECK(load.dataset.size() == 1);
    CHECK(load.skipped.size() == 1);
  }

  TEST_CASE("capture JSON round-trips at full precision") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
      DigitSample s = tptest::RandomSample(rng, 6 + i, i % 10);
      s.key.user_id = "alice";
      const nlohmann::json j = SampleToCaptureJson(s);
      CHECK(j.contains("user"));
      CHECK(j["points"][0].contains("x"));
      const DigitSample back =
          SampleFromCaptureJson(nlohmann::json::parse(j.dump()), 1, 1);
      CHECK(back == s);
    }
    CHECK(CodeOf([] {
            SampleFromCaptureJson(nlohmann::json{{"digit", 1}}, 1, 1);
          }) == ErrorCode::kMalformedFile);
  }
}
