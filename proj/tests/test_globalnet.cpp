#include <doctest.h>

#include <cmath>

#include "lgrn/error.hpp"
#include "lgrn/globalnet.hpp"
#include "lgrn/losses.hpp"
#include "support.hpp"

using namespace lgrn;

namespace {

GlobalNetSpec small_global(int levels, int width) {
  GlobalNetSpec s;
  s.levels = levels;
  s.base_width = width;
  return s;
}

Tensor<double> crop(const Tensor<double>& x, int y0, int x0, int h, int w) {
  Tensor<double> out(x.channels(), h, w);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out(c, y, xx) = x(c, y0 + y, x0 + xx);
  return out;
}

}  // namespace

TEST_CASE("dual-branch block decomposes additively") {
  std::mt19937_64 rng(1);
  DualBranchBlock<double> block("b", 2, 3);
  block.init(rng);
  const auto x = test::random_tensor(2, 9, 10, rng);

  SUBCASE("zero weights leave the bias") {
    std::fill(block.regular.weight.value.begin(), block.regular.weight.value.end(), 0.0);
    std::fill(block.dilated.weight.value.begin(), block.dilated.weight.value.end(), 0.0);
    block.regular.bias.value = {0.5, -1.0, 2.0};
    const auto y = block.apply(x);
    for (int c = 0; c < 3; ++c)
      for (double v : y.channel(c)) CHECK(v == block.regular.bias.value[c]);
  }
  SUBCASE("zero dilated branch equals the plain conv") {
    std::fill(block.dilated.weight.value.begin(), block.dilated.weight.value.end(), 0.0);
    const auto y = block.apply(x);
    const auto ref = block.regular.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data()[i] - ref.data()[i]) < 1e-6);
  }
  SUBCASE("zero regular branch equals the dilated conv") {
    std::fill(block.regular.weight.value.begin(), block.regular.weight.value.end(), 0.0);
    std::fill(block.regular.bias.value.begin(), block.regular.bias.value.end(), 0.0);
    const auto y = block.apply(x);
    const auto ref = block.dilated.apply(x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data()[i] - ref.data()[i]) < 1e-6);
  }
  SUBCASE("impulse support is the union of the 3x3 and dilated 5x5 stencils") {
    std::fill(block.regular.bias.value.begin(), block.regular.bias.value.end(), 0.0);
    Tensor<double> impulse(2, 11, 11);
    impulse(0, 5, 5) = 1.0;
    const auto y = block.apply(impulse);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const int dy = i - 5, dx = j - 5;
          const bool in3 = std::abs(dy) <= 1 && std::abs(dx) <= 1;
          const bool in5 = std::abs(dy) <= 2 && std::abs(dx) <= 2 && dy % 2 == 0 && dx % 2 == 0;
          CHECK((y(c, i, j) != 0.0) == (in3 || in5));
        }
  }
  CHECK_THROWS_AS(block.apply(test::random_tensor(3, 9, 9, rng)), DataError);
}

TEST_CASE("global net shape contract") {
  GlobalNet<float> net(small_global(4, 4), 1);
  std::mt19937_64 rng(2);
  for (int n : {64, 96}) {
    const auto y = net.apply(test::random_tensor<float>(2, n, n, rng, 0, 1));
    CHECK(y.channels() == 1);
    CHECK(y.height() == n);
    CHECK(y.width() == n);
  }
  CHECK_THROWS_WITH_AS(net.apply(Tensor<float>(2, 72, 64)), doctest::Contains("pad"), DataError);
  CHECK_THROWS_AS(net.apply(Tensor<float>(1, 64, 64)), DataError);
}

TEST_CASE("global net on a full 512x512 input") {
  GlobalNet<float> net(GlobalNetSpec{}, 3);
  const auto y = net.apply(Tensor<float>(2, 512, 512, 0.25f));
  CHECK(y.height() == 512);
  CHECK(y.width() == 512);
}

TEST_CASE("evaluation is independent of call order") {
  GlobalNet<float> net(small_global(3, 4), 4);
  std::mt19937_64 rng(4);
  const auto a = test::random_tensor<float>(2, 32, 32, rng, 0, 1);
  const auto b = test::random_tensor<float>(2, 32, 32, rng, 0, 1);
  const auto ya = net.apply(a);
  const auto yb = net.apply(b);
  CHECK(net.apply(b) == yb);
  CHECK(net.apply(a) == ya);
}

TEST_CASE("global net is translation consistent away from borders") {
  // Two levels keep the receptive field small enough for an interior to exist.
  GlobalNet<double> net(small_global(2, 4), 5);
  std::mt19937_64 rng(5);
  const auto big = test::random_tensor(2, 160, 160, rng, 0, 1);
  const auto ya = net.apply(crop(big, 0, 0, 128, 128));
  const auto yb = net.apply(crop(big, 16, 16, 128, 128));
  for (int y = 48; y < 96; ++y)
    for (int x = 48; x < 96; ++x) CHECK(std::abs(yb.at(y - 16, x - 16) - ya.at(y, x)) < 1e-4);
}

TEST_CASE("global_input clamps the local channel and zero-fills when absent") {
  Tensor<float> image(1, 16, 16, 0.5f);
  Tensor<float> local(1, 16, 16, 1.7f);
  local.at(0, 0) = -0.3f;
  const auto in = global_input(image, &local);
  REQUIRE(in.channels() == 2);
  CHECK(in(1, 0, 0) == 0.0f);
  CHECK(in(1, 3, 3) == 1.0f);
  CHECK(in(0, 3, 3) == 0.5f);
  const auto zero = global_input<float>(image, nullptr);
  for (float v : zero.channel(1)) CHECK(v == 0.0f);
}

TEST_CASE("attention score stays inside (0,1) and is deterministic") {
  AttentionNet<double> net(AttentionSpec{}, 6);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 5; ++i) {
    const auto m = test::random_tensor(1, 64, 64, rng, 0, 1);
    const auto img = test::random_tensor(1, 64, 64, rng, 0, 1);
    const double s = net.apply(m, img);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(net.apply(m, img) == s);
  }
  // Saturating inputs still give an interior score.
  auto p = net.export_params();
  for (auto& [name, arr] : p.arrays)
    for (double& v : arr.values) v = 50.0;
  net.import_params(p);
  const double s = net.apply(Tensor<double>(1, 64, 64, 1.0), Tensor<double>(1, 64, 64, 1.0));
  CHECK(s < 1.0);
  CHECK(s > 0.0);
  CHECK_THROWS_AS(net.apply(Tensor<double>(1, 64, 64), Tensor<double>(1, 32, 32)), DataError);
}

TEST_CASE("global net loss_similar gradients match finite differences") {
  GlobalNet<double> net(small_global(2, 2), 7);
  std::mt19937_64 rng(7);
  auto input = test::random_tensor(2, 8, 8, rng, 0, 1);
  Tensor<double> target(1, 8, 8);
  target.at(2, 3) = 1.0;
  target.at(5, 5) = 1.0;
  target.at(5, 6) = 1.0;
  net.zero_grad();
  Tensor<double> grad;
  loss_similar(net.forward(input), target, &grad);
  net.backward(grad);
  auto f = [&] { return loss_similar(net.forward(input), target); };
  for (auto* p : net.params()) {
    if (!p->trainable) continue;
    CAPTURE(p->name);
    const auto analytic = p->grad;
    // Biases feeding a batch norm have a true gradient of zero; the larger
    // floor keeps difference noise on them from reading as relative error.
    CHECK(test::fd_max_rel_error(p->value, analytic, f, 1e-6, 1e-5) < 1e-4);
  }
}

TEST_CASE("checkpoint groups for global and attention weights") {
  GlobalNet<float> g(small_global(2, 4), 8);
  AttentionNet<float> a(AttentionSpec{}, 8);
  auto p = g.export_params();
  p.merge(a.export_params());
  CHECK(p.has_group("global."));
  CHECK(p.has_group("attention."));
  std::mt19937_64 rng(8);
  OctImage img{test::random_tensor<float>(1, 32, 32, rng, 0, 1)};
  HeatMap local{test::random_tensor<float>(1, 32, 32, rng, 0, 1)};
  const auto refined = global_forward(p, img, local);
  for (float v : refined.values.values()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const double s = attention_forward(p, local, img);
  CHECK(s == a.apply(local.values, img.pixels));
}
