#pragma once

#include <vector>

#include "lgrn/nn.hpp"

namespace lgrn::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over the trainable members of a parameter list. Buffers are skipped.
template <typename T>
class Adam {
 public:
  Adam(const ParamList<T>& params, AdamOptions opt = {});

  void step();
  void zero_grad();
  long steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

 private:
  ParamList<T> params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace lgrn::nn
