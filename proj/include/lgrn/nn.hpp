#pragma once

// Minimal convolutional building blocks with hand-written backward passes.
//
// Every layer offers three entry points:
//   apply(x)     pure evaluation-mode forward; safe to call concurrently
//   forward(x)   training-mode forward that caches what backward needs
//   backward(g)  consumes the cache, accumulates parameter gradients and
//                returns the gradient with respect to the layer input
//
// Layers are templated on the scalar type. float is used for training and
// inference; double backs the finite-difference gradient checks.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "lgrn/tensor.hpp"

namespace lgrn::nn {

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty for non-trainable buffers
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::vector<int> s, bool train = true);
  std::size_t numel() const { return value.size(); }
  void zero_grad();
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

/// Shape-tagged float64 array as stored in checkpoints.
struct NamedArray {
  std::vector<int> shape;
  std::vector<double> values;
};

/// Named weights of one or more networks plus free-form metadata.
struct ModelParams {
  std::map<std::string, std::string> meta;
  std::map<std::string, NamedArray> arrays;
  int epoch = 0;
  double loss = 0.0;

  bool has_group(const std::string& prefix) const;
  /// Keep only arrays and metadata whose key starts with prefix.
  ModelParams group(const std::string& prefix) const;
  void merge(const ModelParams& other);
};

template <typename T>
void export_params(const ParamList<T>& params, ModelParams& out);

/// Copy values in; throws DataError naming the first missing or mis-shaped layer.
template <typename T>
void import_params(const ModelParams& in, const ParamList<T>& params);

/// True when every value of every array is finite.
bool all_finite(const ModelParams& params);

// ---------------------------------------------------------------------------

struct ConvOptions {
  int in = 1;
  int out = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int dilation = 1;
  bool bias = true;
};

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, ConvOptions opt);

  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);

  void init(std::mt19937_64& rng, double gain = 2.0);
  void collect(ParamList<T>& out);
  const ConvOptions& options() const { return opt_; }
  int out_size(int n) const;

  Param<T> weight;  // out x in x k x k
  Param<T> bias;    // out (unused when !opt.bias)

 private:
  void check_input(const Tensor<T>& x) const;

  std::string name_;
  ConvOptions opt_;
  Tensor<T> input_;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, double momentum = 0.1, double eps = 1e-5);

  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
  void collect(ParamList<T>& out);

  Param<T> gamma;
  Param<T> beta;
  Param<T> running_mean;
  Param<T> running_var;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

/// slope 0 gives a plain ReLU.
template <typename T>
class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.0) : slope_(static_cast<T>(slope)) {}
  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy) const;

 private:
  T slope_;
  Tensor<T> input_;
};

/// 2x2 max pooling with stride 2; input dims must be even.
template <typename T>
class MaxPool2 {
 public:
  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy) const;

 private:
  int in_h_ = 0, in_w_ = 0;
  std::vector<std::size_t> argmax_;
};

/// 2x2 transposed convolution with stride 2 (exact 2x upsampling).
template <typename T>
class UpConv2 {
 public:
  UpConv2() = default;
  UpConv2(const std::string& name, int in, int out);

  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
  void init(std::mt19937_64& rng);
  void collect(ParamList<T>& out);

  Param<T> weight;  // stored as (out * 4) x in
  Param<T> bias;

 private:
  std::string name_;
  int in_ = 0, out_ = 0;
  Tensor<T> input_;
};

/// Fixed (non-trainable) separable Gaussian, truncated at +-3 sigma,
/// reflect-padded. Linear, so backward is its exact adjoint.
template <typename T>
class GaussianSmoother {
 public:
  GaussianSmoother() = default;
  explicit GaussianSmoother(double sigma);

  Tensor<T> apply(const Tensor<T>& x) const;
  Tensor<T> backward(const Tensor<T>& gy) const;
  int radius() const { return static_cast<int>(taps_.size() / 2); }
  const std::vector<double>& taps() const { return taps_; }
  double sigma() const { return sigma_; }

 private:
  double sigma_ = 0.0;
  std::vector<double> taps_;
};

/// Normalized 1-D Gaussian taps over [-ceil(3 sigma), ceil(3 sigma)].
std::vector<double> gaussian_taps(double sigma);

/// Index into [0, n) with mirror reflection that does not repeat the edge.
int reflect_index(int i, int n);

/// Fully connected layer on a flat feature vector.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out);

  std::vector<T> apply(const std::vector<T>& x) const;
  std::vector<T> forward(const std::vector<T>& x);
  std::vector<T> backward(const std::vector<T>& gy);
  void init(std::mt19937_64& rng);
  void collect(ParamList<T>& out);

  Param<T> weight;  // out x in
  Param<T> bias;

 private:
  int in_ = 0, out_ = 0;
  std::vector<T> input_;
};

template <typename T>
std::vector<T> global_average(const Tensor<T>& x);

template <typename T>
Tensor<T> global_average_backward(const std::vector<T>& gy, int h, int w);

}  // namespace lgrn::nn
