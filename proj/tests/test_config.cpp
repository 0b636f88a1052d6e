#include <doctest.h>

#include <cmath>
#include <limits>

#include "lgrn/config.hpp"
#include "lgrn/synthoct.hpp"
#include "support.hpp"

using namespace lgrn;

namespace {

struct Demo {
  int n = 3;
  double rate = 0.5;
  bool on = false;
  std::string name = "x";
  std::uint64_t seed = 7;
};

const std::vector<ConfigField<Demo>>& demo_fields() {
  static const std::vector<ConfigField<Demo>> f{
      {"n", "", &Demo::n}, {"rate", "", &Demo::rate}, {"on", "", &Demo::on}, {"name", "", &Demo::name},
      {"seed", "", &Demo::seed}};
  return f;
}

}  // namespace

TEST_CASE("key/value parsing") {
  const auto kv = parse_key_values("# header\n\n a = 1 \nb=two words # trailing\n", "t");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");

  try {
    parse_key_values("a = 1\n\nnot a pair\n", "cfg.conf");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.path() == "cfg.conf");
  }
  try {
    parse_key_values("a = 1\nb = 2\na = 3\n", "dup");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_key_values(" = 4\n", "e"), ParseError);
  CHECK_THROWS_AS(read_key_values(test::temp_dir("cfg") / "nope.conf"), DataError);
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (double v : {0.1, 1e-300, 3.0, -0.0, 1.0 / 3.0, std::numeric_limits<double>::max()}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.001) == "0.001");
}

TEST_CASE("field tables set, dump and reject values") {
  Demo d;
  apply_key_values(d, demo_fields(), {{"n", "12"}, {"rate", "1e-3"}, {"on", "true"}, {"unrelated", "z"}});
  CHECK(d.n == 12);
  CHECK(d.rate == 0.001);
  CHECK(d.on);
  const auto text = format_key_values(to_entries(d, demo_fields()));
  CHECK(text == "n = 12\nrate = 0.001\non = true\nname = x\nseed = 7\n");

  Demo back;
  apply_key_values(back, demo_fields(), parse_key_values(text, "dump"));
  CHECK(back.n == d.n);
  CHECK(back.rate == d.rate);
  CHECK(back.on == d.on);

  CHECK_THROWS_AS(set_field(d, demo_fields()[0], "1.5"), UsageError);
  CHECK_THROWS_AS(set_field(d, demo_fields()[0], ""), UsageError);
  CHECK_THROWS_AS(set_field(d, demo_fields()[2], "yes"), UsageError);
  CHECK_THROWS_AS(set_field(d, demo_fields()[4], "-1"), UsageError);
  set_field(d, demo_fields()[2], "0");
  CHECK_FALSE(d.on);
}

TEST_CASE("synth config survives a manifest round trip") {
  SynthConfig c;
  c.image_size = 300;
  c.speckle_strength = 0.0375;
  c.rng_seed = 99;
  SynthConfig back;
  apply_key_values(back, SynthConfig::fields(), parse_key_values(format_key_values(to_entries(c, SynthConfig::fields())), "m"));
  CHECK(to_entries(back, SynthConfig::fields()) == to_entries(c, SynthConfig::fields()));
}
