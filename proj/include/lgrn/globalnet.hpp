#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "lgrn/nn.hpp"
#include "lgrn/types.hpp"

namespace lgrn {

/// Encoder/decoder refinement network. Each level runs one dual-branch block
/// (3x3 conv + dilation-2 3x3 conv, summed) followed by batch norm and ReLU.
/// Encoder levels end in 2x2 max pooling; decoder levels upsample with a 2x2
/// stride-2 transposed conv and concatenate the matching encoder output.
struct GlobalNetSpec {
  int levels = 4;
  int base_width = 16;
  int in_channels = 2;  // image + local prediction

  int width(int level) const { return base_width << level; }
  int divisor() const { return 1 << levels; }

  void validate() const;
  void write_meta(nn::ModelParams& params) const;
  static GlobalNetSpec from_meta(const nn::ModelParams& params);
};

/// Appearance discriminator: stride-2 3x3 convs with leaky ReLU, global
/// average pooling, a linear unit and a sigmoid.
struct AttentionSpec {
  int n_layers = 5;
  int base_width = 8;
  int in_channels = 2;  // heatmap + image

  int width(int layer) const { return base_width << std::min(layer, 3); }

  void validate() const;
  void write_meta(nn::ModelParams& params) const;
  static AttentionSpec from_meta(const nn::ModelParams& params);
};

/// Sum of a regular 3x3 branch (pad 1, carries the bias) and a dilation-2
/// 3x3 branch (pad 2). Spatial dims are preserved.
template <typename T>
class DualBranchBlock {
 public:
  DualBranchBlock() = default;
  DualBranchBlock(const std::string& name, int in, int out);

  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
  void init(std::mt19937_64& rng);
  void collect(nn::ParamList<T>& out);

  nn::Conv2d<T> regular;
  nn::Conv2d<T> dilated;

 private:
  void check_input(const Tensor<T>& x) const;
  std::string name_;
};

template <typename T>
class GlobalNet {
 public:
  explicit GlobalNet(const GlobalNetSpec& spec, std::uint64_t seed = 0);

  const GlobalNetSpec& spec() const { return spec_; }

  /// Input is in_channels x H x W with H, W divisible by 2^levels; raw output 1 x H x W.
  Tensor<T> apply(const Tensor<T>& input) const;
  Tensor<T> forward(const Tensor<T>& input);
  Tensor<T> backward(const Tensor<T>& grad);

  nn::ParamList<T> params();
  nn::ModelParams export_params() const;
  void import_params(const nn::ModelParams& params);
  void zero_grad();

 private:
  struct Stage {
    DualBranchBlock<T> block;
    nn::BatchNorm2d<T> bn;
    nn::LeakyRelu<T> relu;
  };

  void check_input(const Tensor<T>& input) const;

  GlobalNetSpec spec_;
  std::vector<Stage> encoder_;
  std::vector<nn::MaxPool2<T>> pools_;
  Stage bottleneck_;
  std::vector<nn::UpConv2<T>> ups_;
  std::vector<Stage> decoder_;
  nn::Conv2d<T> head_;
};

template <typename T>
class AttentionNet {
 public:
  explicit AttentionNet(const AttentionSpec& spec, std::uint64_t seed = 0);

  const AttentionSpec& spec() const { return spec_; }

  /// Score in (0, 1) for a (heatmap, image) pair.
  double apply(const Tensor<T>& map, const Tensor<T>& image) const;
  double forward(const Tensor<T>& map, const Tensor<T>& image);
  /// Backpropagate d(loss)/d(score) of the latest forward. Returns the
  /// gradient with respect to the heatmap channel.
  Tensor<T> backward(double d_score);

  nn::ParamList<T> params();
  nn::ModelParams export_params() const;
  void import_params(const nn::ModelParams& params);
  void zero_grad();

 private:
  Tensor<T> stack(const Tensor<T>& map, const Tensor<T>& image) const;

  AttentionSpec spec_;
  std::vector<nn::Conv2d<T>> convs_;
  std::vector<nn::LeakyRelu<T>> acts_;
  nn::Linear<T> fc_;
  int last_h_ = 0, last_w_ = 0;
  double last_score_ = 0.0;
  bool last_clamped_ = false;
};

/// Build the two-channel global-net input. An empty local map gives a zero channel.
template <typename T>
Tensor<T> global_input(const Tensor<T>& image, const Tensor<T>* local_map);

/// Evaluation-mode refinement from checkpoint weights; output clamped to [0, 1].
/// Throws DataError when dims are not divisible by 2^levels.
HeatMap global_forward(const nn::ModelParams& params, const OctImage& image, const HeatMap& local_map);

/// Evaluation-mode discriminator score from checkpoint weights.
double attention_forward(const nn::ModelParams& params, const HeatMap& map, const OctImage& image);

}  // namespace lgrn
