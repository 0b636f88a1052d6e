#pragma once

#include <cstdint>
#include <vector>

#include "lgrn/adam.hpp"
#include "lgrn/nn.hpp"
#include "lgrn/types.hpp"

namespace lgrn {

/// Patch-based detector: a stem conv followed by residual units of 3x3
/// conv + batch norm + ReLU, a linear 1x1 head and a fixed Gaussian smoother.
/// Layers after the stem are grouped in pairs, each pair wrapped by an
/// identity skip; an odd trailing layer forms a one-layer residual unit.
struct LocalNetSpec {
  int n_layers = 9;
  int channels = 32;
  double smoother_sigma = 1.0;
  int patch_size = 64;

  /// Half-width of the conv stack's receptive field (9 for nine 3x3 layers).
  int receptive_radius() const { return n_layers; }
  int smoother_radius() const;
  /// Farthest input pixel (Chebyshev distance) that can change an output pixel.
  int influence_radius() const { return receptive_radius() + smoother_radius(); }
  /// Smallest input side the network accepts.
  int min_input() const { return 2 * receptive_radius() + 1; }

  void validate() const;
  void write_meta(nn::ModelParams& params) const;
  static LocalNetSpec from_meta(const nn::ModelParams& params);
};

template <typename T>
class LocalNet {
 public:
  explicit LocalNet(const LocalNetSpec& spec, std::uint64_t seed = 0);

  const LocalNetSpec& spec() const { return spec_; }

  /// Evaluation-mode forward of a 1 x H x W image; output is 1 x H x W.
  Tensor<T> apply(const Tensor<T>& image) const;
  /// Training-mode forward (batch statistics), caches for backward.
  Tensor<T> forward(const Tensor<T>& image);
  /// Accumulates parameter gradients, returns d(loss)/d(image).
  Tensor<T> backward(const Tensor<T>& grad);

  nn::ParamList<T> params();
  nn::ModelParams export_params() const;
  void import_params(const nn::ModelParams& params);
  void zero_grad();

 private:
  struct Layer {
    nn::Conv2d<T> conv;
    nn::BatchNorm2d<T> bn;
    nn::LeakyRelu<T> relu;
  };
  using Unit = std::vector<Layer>;

  void check_input(const Tensor<T>& image) const;

  LocalNetSpec spec_;
  Layer stem_;
  std::vector<Unit> units_;
  nn::Conv2d<T> head_;
  nn::GaussianSmoother<T> smoother_;
};

/// Evaluation-mode local detection on an image with weights from a checkpoint.
HeatMap local_forward(const nn::ModelParams& params, const OctImage& image);

/// Convolution with the normalized, +-3 sigma truncated Gaussian,
/// reflect-padded. Throws UsageError for sigma <= 0.
Tensor<float> gaussian_smooth(const Tensor<float>& map, double sigma);

/// One L1 optimization step on a (patch, target) pair. Returns the loss measured
/// before the update; throws NumericError on a non-finite loss.
template <typename T>
double local_train_step(LocalNet<T>& net, nn::Adam<T>& optimizer, const Tensor<T>& patch,
                        const Tensor<T>& target);

}  // namespace lgrn
