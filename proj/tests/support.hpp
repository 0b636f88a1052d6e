#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "lgrn/nn.hpp"
#include "lgrn/tensor.hpp"

namespace lgrn::test {

template <typename T = double>
Tensor<T> random_tensor(int c, int h, int w, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(c, h, w);
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

// Largest relative disagreement between an analytic gradient and central
// differences of f over the entries of `values`. The floor keeps entries whose
// true derivative is ~0 from dominating through round-off.
inline double fd_max_rel_error(std::vector<double>& values, const std::vector<double>& analytic,
                               const std::function<double()>& f, double h = 1e-6, double floor = 1e-6,
                               std::size_t max_checks = 400) {
  double worst = 0.0;
  const std::size_t n = values.size();
  const std::size_t step = std::max<std::size_t>(1, n / max_checks);
  for (std::size_t i = 0; i < n; i += step) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = f();
    values[i] = keep - h;
    const double down = f();
    values[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lgrn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lgrn::test
