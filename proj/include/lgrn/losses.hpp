#pragma once

#include "lgrn/tensor.hpp"

namespace lgrn {

/// Guard inside the logarithms of the attention losses.
inline constexpr double kLogEpsilon = 1e-7;

/// Mean absolute difference. When grad is non-null it receives d(loss)/d(pred)
/// (sign / N, zero at exact ties).
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad = nullptr);

/// Foreground/background balanced L1:
///   mean |fg * P - M| + mean |(1 - fg) * P|,  fg = ceil(M) (1 wherever M > 0).
/// Both means run over all pixels.
template <typename T>
double loss_similar(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad = nullptr);

/// -[log A(M,I) + log(1 - A(P,I))]; optional derivatives w.r.t. both scores.
double loss_attention_discriminator(double score_real, double score_fake, double* d_real = nullptr,
                                    double* d_fake = nullptr);

/// Non-saturating generator term -log A(P,I).
double loss_attention_generator(double score_fake, double* d_fake = nullptr);

/// The raw two-term log objective the discriminator ascends; always <= 0.
double attention_objective(double score_real, double score_fake);

}  // namespace lgrn
