#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lgrn/dataset.hpp"
#include "lgrn/error.hpp"
#include "lgrn/synthoct.hpp"
#include "support.hpp"

using namespace lgrn;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.image_size = 128;
  c.lumen_radius_min = 28;
  c.lumen_radius_max = 40;
  c.wall_thickness_min = 15;
  c.wall_thickness_max = 25;
  c.catheter_ring_radius = 5;
  c.strut_count_min = 4;
  c.strut_count_max = 10;
  return c;
}

}  // namespace

TEST_CASE("generate_sample is a pure function of config and index") {
  const SynthConfig cfg = small_config();
  const auto a = generate_sample(cfg, 0);
  const auto b = generate_sample(cfg, 0);
  CHECK(a.image.pixels == b.image.pixels);
  CHECK(a.points == b.points);
  const auto c = generate_sample(cfg, 1);
  CHECK_FALSE(a.image.pixels == c.image.pixels);
}

TEST_CASE("different seeds give different images") {
  SynthConfig cfg = small_config();
  const auto a = generate_sample(cfg, 3);
  cfg.rng_seed = 8;
  CHECK_FALSE(a.image.pixels == generate_sample(cfg, 3).image.pixels);
}

TEST_CASE("zero strut count gives an empty point set") {
  SynthConfig cfg = small_config();
  cfg.strut_count_min = cfg.strut_count_max = 0;
  for (int i = 0; i < 3; ++i) CHECK(generate_sample(cfg, i).points.empty());
}

TEST_CASE("synthetic samples satisfy the image and point invariants") {
  const SynthConfig cfg = small_config();
  for (int i = 0; i < 20; ++i) {
    const auto s = generate_sample(cfg, i);
    const auto v = s.image.pixels.values();
    CHECK(*std::min_element(v.begin(), v.end()) >= 0.0f);
    CHECK(*std::max_element(v.begin(), v.end()) == 1.0f);
    CHECK(s.image.height() % 16 == 0);
    CHECK(s.image.width() % 16 == 0);
    CHECK(static_cast<int>(s.points.size()) >= cfg.strut_count_min);
    CHECK(static_cast<int>(s.points.size()) <= cfg.strut_count_max);
    for (std::size_t a = 0; a < s.points.size(); ++a) {
      const auto& p = s.points.points[a];
      CHECK(p.x >= 0);
      CHECK(p.y >= 0);
      CHECK(p.x <= cfg.image_size - 1);
      CHECK(p.y <= cfg.image_size - 1);
      for (std::size_t b = a + 1; b < s.points.size(); ++b) {
        const auto& q = s.points.points[b];
        CHECK(std::hypot(p.x - q.x, p.y - q.y) >= 2 * cfg.strut_bloom_sigma);
      }
    }
    // Quantized to the 16-bit grid so PNG storage is lossless.
    for (float x : v) CHECK(quantize16(x) == x);
  }
}

TEST_CASE("config validation") {
  SynthConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());

  SynthConfig crowded = cfg;
  crowded.strut_count_max = 40;  // 40 * 10 px > circumference of r = 28
  CHECK_THROWS_AS(crowded.validate(), UsageError);

  SynthConfig odd = cfg;
  odd.image_size = 100;
  CHECK_THROWS_AS(odd.validate(), UsageError);

  SynthConfig empty_range = cfg;
  empty_range.wall_thickness_min = 30;
  empty_range.wall_thickness_max = 20;
  CHECK_THROWS_AS(empty_range.validate(), UsageError);

  SynthConfig prob = cfg;
  prob.intima_coverage_prob = 1.5;
  CHECK_THROWS_AS(prob.validate(), UsageError);

  SynthConfig close = cfg;
  close.strut_min_separation = 2.0;  // below 2 * bloom sigma
  CHECK_THROWS_AS(close.validate(), UsageError);
}

TEST_CASE("render_mask single point matches a brute-force disk") {
  StrutPointSet pts{{{10.0, 10.0}}};
  const auto m = render_mask(pts, 32, 32, 3.0);
  int count = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool inside = (x - 10) * (x - 10) + (y - 10) * (y - 10) <= 9;
      CHECK(m.values.at(y, x) == (inside ? 1.0f : 0.0f));
      count += inside;
    }
  CHECK(count == 29);
  CHECK(m.role == HeatRole::kTarget);
}

TEST_CASE("render_mask edge cases") {
  const auto empty = render_mask({}, 16, 16, 3.0);
  for (float v : empty.values.values()) CHECK(v == 0.0f);

  StrutPointSet overlap{{{8.0, 8.0}, {10.0, 8.0}}};
  const auto u = render_mask(overlap, 20, 20, 3.0);
  int count = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const float v = u.values.at(y, x);
      CHECK((v == 0.0f || v == 1.0f));
      const bool inside = std::hypot(x - 8.0, y - 8.0) <= 3 || std::hypot(x - 10.0, y - 8.0) <= 3;
      CHECK((v == 1.0f) == inside);
      count += inside;
    }
  CHECK(count > 29);

  StrutPointSet shuffled{{{10.0, 8.0}, {8.0, 8.0}}};
  CHECK(render_mask(shuffled, 20, 20, 3.0).values == u.values);

  StrutPointSet bad{{{5.0, 5.0}, {40.0, 3.0}}};
  try {
    render_mask(bad, 32, 32, 3.0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("#1") != std::string::npos);
  }
  CHECK_THROWS_AS(render_mask(overlap, 20, 20, 0.5), UsageError);
}

TEST_CASE("dataset round trip is exact") {
  const auto dir = test::temp_dir("dataset_roundtrip");
  const SynthConfig cfg = small_config();
  std::vector<SynthSample> samples;
  for (int i = 0; i < 3; ++i) samples.push_back(generate_sample(cfg, i));
  write_dataset(samples, dir, &cfg);
  const auto back = read_dataset(dir);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].index == i);
    CHECK(back[i].image.pixels == samples[i].image.pixels);
    CHECK(back[i].points == samples[i].points);
  }
  const auto manifest = read_manifest(dir);
  REQUIRE(manifest.has_value());
  CHECK(manifest->at("image_size") == "128");
  CHECK(manifest->at("rng_seed") == "7");
}

TEST_CASE("reading an empty directory gives an empty dataset") {
  const auto dir = test::temp_dir("dataset_empty");
  CHECK(read_dataset(dir).empty());
  CHECK(read_dataset(dir / "missing").empty());
}

TEST_CASE("corrupt points file reports path and line") {
  const auto dir = test::temp_dir("dataset_corrupt");
  const SynthConfig cfg = small_config();
  write_dataset({generate_sample(cfg, 0)}, dir, &cfg);
  {
    std::ofstream out(dir / "points" / "00000.csv");
    out << "x,y\n1.5,2\n3,abc\n";
  }
  try {
    read_dataset(dir);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("00000.csv") != std::string::npos);
  }
}

TEST_CASE("points csv accepts a header-only file and a score column") {
  const auto dir = test::temp_dir("points_csv");
  write_points_csv(dir / "a.csv", {});
  CHECK(read_points_csv(dir / "a.csv").points.empty());

  StrutPointSet pts{{{1.25, 2.5}, {0.1, 1e-3}}};
  std::vector<double> scores{0.9, 0.75};
  write_points_csv(dir / "b.csv", pts, &scores);
  const auto back = read_points_csv(dir / "b.csv");
  CHECK(back.points == pts);
  CHECK(back.scores == scores);

  {
    std::ofstream out(dir / "c.csv");
    out << "x,y\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_points_csv(dir / "c.csv"), ParseError);
}
