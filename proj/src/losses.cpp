#include "lgrn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "lgrn/error.hpp"

namespace lgrn {

namespace {

template <typename T>
void check_dims(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw DataError(std::string(what) + ": dimension mismatch " + shape_string(a) + " vs " +
                    shape_string(b));
}

template <typename T>
T sign(T v) {
  return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0});
}

double guarded_log(double v) { return std::log(std::max(v, kLogEpsilon)); }

}  // namespace

template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) {
  check_dims(pred, target, "l1_loss");
  const auto p = pred.values();
  const auto m = target.values();
  const double n = static_cast<double>(p.size());
  if (grad) *grad = Tensor<T>(pred.channels(), pred.height(), pred.width());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(m[i]);
    sum += std::abs(d);
    if (grad) grad->data()[i] = static_cast<T>(sign(d) / n);
  }
  return sum / n;
}

template <typename T>
double loss_similar(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) {
  check_dims(pred, target, "loss_similar");
  const auto p = pred.values();
  const auto m = target.values();
  const double n = static_cast<double>(p.size());
  if (grad) *grad = Tensor<T>(pred.channels(), pred.height(), pred.width());
  double fg_sum = 0.0;
  double bg_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mi = m[i];
    const double pi = p[i];
    const double fg = std::ceil(std::clamp(mi, 0.0, 1.0));
    const double fg_diff = fg * pi - mi;
    const double bg_val = (1.0 - fg) * pi;
    fg_sum += std::abs(fg_diff);
    bg_sum += std::abs(bg_val);
    if (grad) grad->data()[i] = static_cast<T>((fg * sign(fg_diff) + (1.0 - fg) * sign(bg_val)) / n);
  }
  return fg_sum / n + bg_sum / n;
}

double loss_attention_discriminator(double score_real, double score_fake, double* d_real,
                                    double* d_fake) {
  if (d_real) *d_real = score_real > kLogEpsilon ? -1.0 / score_real : 0.0;
  if (d_fake) *d_fake = 1.0 - score_fake > kLogEpsilon ? 1.0 / (1.0 - score_fake) : 0.0;
  return -(guarded_log(score_real) + guarded_log(1.0 - score_fake));
}

double loss_attention_generator(double score_fake, double* d_fake) {
  if (d_fake) *d_fake = score_fake > kLogEpsilon ? -1.0 / score_fake : 0.0;
  return -guarded_log(score_fake);
}

double attention_objective(double score_real, double score_fake) {
  return guarded_log(score_real) + guarded_log(1.0 - score_fake);
}

template double l1_loss<float>(const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double l1_loss<double>(const Tensor<double>&, const Tensor<double>&, Tensor<double>*);
template double loss_similar<float>(const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double loss_similar<double>(const Tensor<double>&, const Tensor<double>&, Tensor<double>*);

}  // namespace lgrn
