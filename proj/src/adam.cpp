#include "lgrn/adam.hpp"

#include <cmath>

namespace lgrn::nn {

template <typename T>
Adam<T>::Adam(const ParamList<T>& params, AdamOptions opt) : opt_(opt) {
  for (Param<T>* p : params) {
    if (!p->trainable) continue;
    params_.push_back(p);
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param<T>& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double g = p.grad[i];
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
      const double update = opt_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt_.eps);
      p.value[i] = static_cast<T>(p.value[i] - update);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (Param<T>* p : params_) p->zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace lgrn::nn
