#include "lgrn/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <numeric>

#include "lgrn/error.hpp"

namespace lgrn::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;
template <typename T>
using StridedMapR = Eigen::Map<MatR<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedMapR = Eigen::Map<const MatR<T>, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer elements per chunk of output rows.
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

std::string shape_to_string(const std::vector<int>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

int rows_per_chunk(std::size_t k_rows, int out_w, int out_h) {
  const std::size_t per_row = k_rows * static_cast<std::size_t>(out_w);
  return std::clamp(static_cast<int>(kColumnBudget / std::max<std::size_t>(per_row, 1)), 1, out_h);
}

// Fill col (K x n, row-major) for output rows [y0, y1).
template <typename T>
void im2col(const Tensor<T>& x, const ConvOptions& o, int out_w, int y0, int y1, T* col) {
  const int k = o.kernel;
  const int h = x.height();
  const int w = x.width();
  const std::size_t n = static_cast<std::size_t>(y1 - y0) * out_w;
  for (int ci = 0; ci < o.in; ++ci) {
    const T* src = x.channel(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * n;
        const int xoff = kx * o.dilation - o.pad;
        // valid output columns satisfy 0 <= ox * stride + xoff < w
        int lo = 0;
        while (lo < out_w && lo * o.stride + xoff < 0) ++lo;
        int hi = out_w;
        while (hi > lo && (hi - 1) * o.stride + xoff >= w) --hi;
        for (int oy = y0; oy < y1; ++oy) {
          T* dst = row + static_cast<std::size_t>(oy - y0) * out_w;
          const int iy = oy * o.stride - o.pad + ky * o.dilation;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + out_w, T{0});
            continue;
          }
          const T* line = src + static_cast<std::size_t>(iy) * w;
          std::fill(dst, dst + lo, T{0});
          if (o.stride == 1) {
            std::memcpy(dst + lo, line + lo + xoff, sizeof(T) * (hi - lo));
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = line[ox * o.stride + xoff];
          }
          std::fill(dst + hi, dst + out_w, T{0});
        }
      }
    }
  }
}

// Scatter-add col back onto gx, inverse of im2col.
template <typename T>
void col2im(const T* col, const ConvOptions& o, int out_w, int y0, int y1, Tensor<T>& gx) {
  const int k = o.kernel;
  const int h = gx.height();
  const int w = gx.width();
  const std::size_t n = static_cast<std::size_t>(y1 - y0) * out_w;
  for (int ci = 0; ci < o.in; ++ci) {
    T* dst = gx.channel(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * n;
        const int xoff = kx * o.dilation - o.pad;
        for (int oy = y0; oy < y1; ++oy) {
          const int iy = oy * o.stride - o.pad + ky * o.dilation;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + static_cast<std::size_t>(oy - y0) * out_w;
          T* line = dst + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * o.stride + xoff;
            if (ix >= 0 && ix < w) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void he_normal(std::vector<T>& v, double fan_in, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
  for (auto& x : v) x = static_cast<T>(dist(rng));
}

}  // namespace

// --- Param / ModelParams ------------------------------------------------------

template <typename T>
Param<T>::Param(std::string n, std::vector<int> s, bool train)
    : name(std::move(n)), shape(std::move(s)), trainable(train) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                      [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  value.assign(count, T{0});
  if (trainable) grad.assign(count, T{0});
}

template <typename T>
void Param<T>::zero_grad() {
  std::fill(grad.begin(), grad.end(), T{0});
}

bool ModelParams::has_group(const std::string& prefix) const {
  for (const auto& [name, arr] : arrays)
    if (name.starts_with(prefix)) return true;
  return false;
}

ModelParams ModelParams::group(const std::string& prefix) const {
  ModelParams out;
  out.epoch = epoch;
  out.loss = loss;
  for (const auto& [name, arr] : arrays)
    if (name.starts_with(prefix)) out.arrays.emplace(name, arr);
  for (const auto& [key, value] : meta)
    if (key.starts_with(prefix)) out.meta.emplace(key, value);
  return out;
}

void ModelParams::merge(const ModelParams& other) {
  for (const auto& [name, arr] : other.arrays) arrays[name] = arr;
  for (const auto& [key, value] : other.meta) meta[key] = value;
}

template <typename T>
void export_params(const ParamList<T>& params, ModelParams& out) {
  for (const Param<T>* p : params) {
    NamedArray arr;
    arr.shape = p->shape;
    arr.values.assign(p->value.begin(), p->value.end());
    out.arrays[p->name] = std::move(arr);
  }
}

template <typename T>
void import_params(const ModelParams& in, const ParamList<T>& params) {
  for (Param<T>* p : params) {
    auto it = in.arrays.find(p->name);
    if (it == in.arrays.end()) throw DataError("checkpoint has no weights for layer '" + p->name + "'");
    const NamedArray& arr = it->second;
    if (arr.shape != p->shape || arr.values.size() != p->value.size())
      throw DataError("shape mismatch for layer '" + p->name + "': checkpoint " +
                      shape_to_string(arr.shape) + ", expected " + shape_to_string(p->shape));
    for (std::size_t i = 0; i < arr.values.size(); ++i) {
      if (!std::isfinite(arr.values[i]))
        throw DataError("non-finite weight in layer '" + p->name + "'");
      p->value[i] = static_cast<T>(arr.values[i]);
    }
  }
}

bool all_finite(const ModelParams& params) {
  for (const auto& [name, arr] : params.arrays)
    for (double v : arr.values)
      if (!std::isfinite(v)) return false;
  return true;
}

// --- Conv2d ------------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, ConvOptions opt)
    : weight(name + ".weight", {opt.out, opt.in, opt.kernel, opt.kernel}),
      bias(name + ".bias", {opt.out}),
      name_(name),
      opt_(opt) {}

template <typename T>
int Conv2d<T>::out_size(int n) const {
  return (n + 2 * opt_.pad - opt_.dilation * (opt_.kernel - 1) - 1) / opt_.stride + 1;
}

template <typename T>
void Conv2d<T>::check_input(const Tensor<T>& x) const {
  if (x.channels() != opt_.in)
    throw DataError("layer '" + name_ + "' expects " + std::to_string(opt_.in) +
                    " input channels, got " + std::to_string(x.channels()));
  if (out_size(x.height()) < 1 || out_size(x.width()) < 1)
    throw DataError("layer '" + name_ + "' input " + shape_string(x) + " is too small");
}

template <typename T>
void Conv2d<T>::init(std::mt19937_64& rng, double gain) {
  he_normal(weight.value, static_cast<double>(opt_.in) * opt_.kernel * opt_.kernel, gain, rng);
  bias.zero_grad();
  std::fill(bias.value.begin(), bias.value.end(), T{0});
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  if (opt_.bias) out.push_back(&bias);
}

template <typename T>
Tensor<T> Conv2d<T>::apply(const Tensor<T>& x) const {
  check_input(x);
  const int oh = out_size(x.height());
  const int ow = out_size(x.width());
  const std::size_t k_rows = static_cast<std::size_t>(opt_.in) * opt_.kernel * opt_.kernel;
  const std::size_t hw = static_cast<std::size_t>(oh) * ow;
  Tensor<T> y(opt_.out, oh, ow);
  const int step = rows_per_chunk(k_rows, ow, oh);
  std::vector<T> col(k_rows * static_cast<std::size_t>(step) * ow);
  CMapR<T> wmat(weight.value.data(), opt_.out, static_cast<Eigen::Index>(k_rows));
  for (int y0 = 0; y0 < oh; y0 += step) {
    const int y1 = std::min(oh, y0 + step);
    const Eigen::Index n = static_cast<Eigen::Index>(y1 - y0) * ow;
    im2col(x, opt_, ow, y0, y1, col.data());
    CMapR<T> cmat(col.data(), static_cast<Eigen::Index>(k_rows), n);
    StridedMapR<T> ymat(y.data() + static_cast<std::size_t>(y0) * ow, opt_.out, n,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(hw)));
    ymat.noalias() = wmat * cmat;
  }
  if (opt_.bias) {
    for (int c = 0; c < opt_.out; ++c) {
      const T b = bias.value[c];
      for (T& v : y.channel(c)) v += b;
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return apply(x);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& gy) {
  const Tensor<T>& x = input_;
  const int oh = gy.height();
  const int ow = gy.width();
  const std::size_t k_rows = static_cast<std::size_t>(opt_.in) * opt_.kernel * opt_.kernel;
  const std::size_t hw = static_cast<std::size_t>(oh) * ow;
  Tensor<T> gx(x.channels(), x.height(), x.width());
  const int step = rows_per_chunk(k_rows, ow, oh);
  std::vector<T> col(k_rows * static_cast<std::size_t>(step) * ow);
  std::vector<T> dcol(col.size());
  CMapR<T> wmat(weight.value.data(), opt_.out, static_cast<Eigen::Index>(k_rows));
  MapR<T> dw(weight.grad.data(), opt_.out, static_cast<Eigen::Index>(k_rows));
  for (int y0 = 0; y0 < oh; y0 += step) {
    const int y1 = std::min(oh, y0 + step);
    const Eigen::Index n = static_cast<Eigen::Index>(y1 - y0) * ow;
    im2col(x, opt_, ow, y0, y1, col.data());
    CMapR<T> cmat(col.data(), static_cast<Eigen::Index>(k_rows), n);
    CStridedMapR<T> gmat(gy.data() + static_cast<std::size_t>(y0) * ow, opt_.out, n,
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(hw)));
    dw.noalias() += gmat * cmat.transpose();
    MapR<T> dmat(dcol.data(), static_cast<Eigen::Index>(k_rows), n);
    dmat.noalias() = wmat.transpose() * gmat;
    col2im(dcol.data(), opt_, ow, y0, y1, gx);
  }
  if (opt_.bias) {
    for (int c = 0; c < opt_.out; ++c) {
      T s{0};
      for (T v : gy.channel(c)) s += v;
      bias.grad[c] += s;
    }
  }
  return gx;
}

// --- BatchNorm2d ---------------------------------------------------------------

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, double momentum, double eps)
    : gamma(name + ".gamma", {channels}),
      beta(name + ".beta", {channels}),
      running_mean(name + ".running_mean", {channels}, false),
      running_var(name + ".running_var", {channels}, false),
      momentum_(momentum),
      eps_(eps) {
  std::fill(gamma.value.begin(), gamma.value.end(), T{1});
  std::fill(running_var.value.begin(), running_var.value.end(), T{1});
}

template <typename T>
void BatchNorm2d<T>::collect(ParamList<T>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

template <typename T>
Tensor<T> BatchNorm2d<T>::apply(const Tensor<T>& x) const {
  Tensor<T> y(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c) {
    const T scale = gamma.value[c] / static_cast<T>(std::sqrt(running_var.value[c] + eps_));
    const T shift = beta.value[c] - running_mean.value[c] * scale;
    auto src = x.channel(c);
    auto dst = y.channel(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale + shift;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) {
  const std::size_t n = x.plane();
  Tensor<T> y(x.channels(), x.height(), x.width());
  xhat_ = Tensor<T>(x.channels(), x.height(), x.width());
  inv_std_.assign(x.channels(), T{0});
  for (int c = 0; c < x.channels(); ++c) {
    auto src = x.channel(c);
    double mean = 0.0;
    for (T v : src) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (T v : src) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = static_cast<T>(inv);
    auto xh = xhat_.channel(c);
    auto dst = y.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      xh[i] = static_cast<T>((src[i] - mean) * inv);
      dst[i] = gamma.value[c] * xh[i] + beta.value[c];
    }
    const double unbiased = n > 1 ? var * static_cast<double>(n) / static_cast<double>(n - 1) : var;
    running_mean.value[c] =
        static_cast<T>((1.0 - momentum_) * running_mean.value[c] + momentum_ * mean);
    running_var.value[c] =
        static_cast<T>((1.0 - momentum_) * running_var.value[c] + momentum_ * unbiased);
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& gy) {
  const std::size_t n = gy.plane();
  Tensor<T> gx(gy.channels(), gy.height(), gy.width());
  for (int c = 0; c < gy.channels(); ++c) {
    auto g = gy.channel(c);
    auto xh = xhat_.channel(c);
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_g += g[i];
      sum_gx += static_cast<double>(g[i]) * xh[i];
    }
    gamma.grad[c] += static_cast<T>(sum_gx);
    beta.grad[c] += static_cast<T>(sum_g);
    const double k = static_cast<double>(gamma.value[c]) * inv_std_[c] / static_cast<double>(n);
    auto dst = gx.channel(c);
    for (std::size_t i = 0; i < n; ++i)
      dst[i] = static_cast<T>(k * (static_cast<double>(n) * g[i] - sum_g - xh[i] * sum_gx));
  }
  return gx;
}

// --- LeakyRelu -------------------------------------------------------------------

template <typename T>
Tensor<T> LeakyRelu<T>::apply(const Tensor<T>& x) const {
  Tensor<T> y = x;
  for (T& v : y.values())
    if (v < T{0}) v *= slope_;
  return y;
}

template <typename T>
Tensor<T> LeakyRelu<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return apply(x);
}

template <typename T>
Tensor<T> LeakyRelu<T>::backward(const Tensor<T>& gy) const {
  Tensor<T> gx = gy;
  auto in = input_.values();
  auto g = gx.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (in[i] <= T{0}) g[i] *= slope_;
  return gx;
}

// --- MaxPool2 --------------------------------------------------------------------

template <typename T>
Tensor<T> MaxPool2<T>::apply(const Tensor<T>& x) const {
  if (x.height() % 2 || x.width() % 2)
    throw DataError("max pooling needs even dims, got " + shape_string(x));
  Tensor<T> y(x.channels(), x.height() / 2, x.width() / 2);
  for (int c = 0; c < x.channels(); ++c)
    for (int oy = 0; oy < y.height(); ++oy)
      for (int ox = 0; ox < y.width(); ++ox) {
        const int iy = 2 * oy, ix = 2 * ox;
        y(c, oy, ox) = std::max(std::max(x(c, iy, ix), x(c, iy, ix + 1)),
                                std::max(x(c, iy + 1, ix), x(c, iy + 1, ix + 1)));
      }
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = apply(x);
  in_h_ = x.height();
  in_w_ = x.width();
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < x.channels(); ++c)
    for (int oy = 0; oy < y.height(); ++oy)
      for (int ox = 0; ox < y.width(); ++ox, ++o) {
        std::size_t best = (static_cast<std::size_t>(c) * in_h_ + 2 * oy) * in_w_ + 2 * ox;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx =
                (static_cast<std::size_t>(c) * in_h_ + 2 * oy + dy) * in_w_ + 2 * ox + dx;
            if (x.data()[idx] > x.data()[best]) best = idx;
          }
        argmax_[o] = best;
      }
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& gy) const {
  Tensor<T> gx(gy.channels(), in_h_, in_w_);
  for (std::size_t o = 0; o < gy.size(); ++o) gx.data()[argmax_[o]] += gy.data()[o];
  return gx;
}

// --- UpConv2 ---------------------------------------------------------------------

template <typename T>
UpConv2<T>::UpConv2(const std::string& name, int in, int out)
    : weight(name + ".weight", {out, 2, 2, in}), bias(name + ".bias", {out}), name_(name), in_(in),
      out_(out) {}

template <typename T>
void UpConv2<T>::init(std::mt19937_64& rng) {
  he_normal(weight.value, static_cast<double>(in_), 2.0, rng);
  std::fill(bias.value.begin(), bias.value.end(), T{0});
}

template <typename T>
void UpConv2<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
Tensor<T> UpConv2<T>::apply(const Tensor<T>& x) const {
  if (x.channels() != in_)
    throw DataError("layer '" + name_ + "' expects " + std::to_string(in_) + " input channels, got " +
                    std::to_string(x.channels()));
  const int h = x.height(), w = x.width();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  MatR<T> tmp(out_ * 4, hw);
  tmp.noalias() = CMapR<T>(weight.value.data(), out_ * 4, in_) * CMapR<T>(x.data(), in_, hw);
  Tensor<T> y(out_, 2 * h, 2 * w);
  for (int co = 0; co < out_; ++co)
    for (int d = 0; d < 4; ++d) {
      const int dy = d / 2, dx = d % 2;
      const T* row = tmp.data() + (static_cast<std::size_t>(co) * 4 + d) * hw;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix)
          y(co, 2 * iy + dy, 2 * ix + dx) = row[iy * w + ix] + bias.value[co];
    }
  return y;
}

template <typename T>
Tensor<T> UpConv2<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return apply(x);
}

template <typename T>
Tensor<T> UpConv2<T>::backward(const Tensor<T>& gy) {
  const int h = input_.height(), w = input_.width();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  MatR<T> g(out_ * 4, hw);
  for (int co = 0; co < out_; ++co) {
    T s{0};
    for (int d = 0; d < 4; ++d) {
      const int dy = d / 2, dx = d % 2;
      T* row = g.data() + (static_cast<std::size_t>(co) * 4 + d) * hw;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
          row[iy * w + ix] = gy(co, 2 * iy + dy, 2 * ix + dx);
          s += row[iy * w + ix];
        }
    }
    bias.grad[co] += s;
  }
  CMapR<T> xmat(input_.data(), in_, hw);
  MapR<T>(weight.grad.data(), out_ * 4, in_).noalias() += g * xmat.transpose();
  Tensor<T> gx(in_, h, w);
  MapR<T>(gx.data(), in_, hw).noalias() =
      CMapR<T>(weight.value.data(), out_ * 4, in_).transpose() * g;
  return gx;
}

// --- Gaussian smoothing -------------------------------------------------------------

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw UsageError("gaussian sigma must be positive, got " + std::to_string(sigma));
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    taps[k + r] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += taps[k + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

template <typename T>
GaussianSmoother<T>::GaussianSmoother(double sigma) : sigma_(sigma), taps_(gaussian_taps(sigma)) {}

template <typename T>
Tensor<T> GaussianSmoother<T>::apply(const Tensor<T>& x) const {
  const int r = radius();
  const int h = x.height(), w = x.width();
  Tensor<T> tmp(x.channels(), h, w);
  Tensor<T> y(x.channels(), h, w);
  for (int c = 0; c < x.channels(); ++c) {
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (int k = -r; k <= r; ++k) s += taps_[k + r] * x(c, yy, reflect_index(xx + k, w));
        tmp(c, yy, xx) = static_cast<T>(s);
      }
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (int k = -r; k <= r; ++k) s += taps_[k + r] * tmp(c, reflect_index(yy + k, h), xx);
        y(c, yy, xx) = static_cast<T>(s);
      }
  }
  return y;
}

template <typename T>
Tensor<T> GaussianSmoother<T>::backward(const Tensor<T>& gy) const {
  const int r = radius();
  const int h = gy.height(), w = gy.width();
  Tensor<T> tmp(gy.channels(), h, w);
  Tensor<T> gx(gy.channels(), h, w);
  for (int c = 0; c < gy.channels(); ++c) {
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        for (int k = -r; k <= r; ++k)
          tmp(c, reflect_index(yy + k, h), xx) += static_cast<T>(taps_[k + r] * gy(c, yy, xx));
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        for (int k = -r; k <= r; ++k)
          gx(c, yy, reflect_index(xx + k, w)) += static_cast<T>(taps_[k + r] * tmp(c, yy, xx));
  }
  return gx;
}

// --- Linear / pooling -------------------------------------------------------------

template <typename T>
Linear<T>::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", {out, in}), bias(name + ".bias", {out}), in_(in), out_(out) {}

template <typename T>
void Linear<T>::init(std::mt19937_64& rng) {
  he_normal(weight.value, static_cast<double>(in_), 1.0, rng);
  std::fill(bias.value.begin(), bias.value.end(), T{0});
}

template <typename T>
void Linear<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
std::vector<T> Linear<T>::apply(const std::vector<T>& x) const {
  if (static_cast<int>(x.size()) != in_)
    throw DataError("linear layer '" + weight.name + "' expects " + std::to_string(in_) + " features");
  std::vector<T> y(out_);
  for (int o = 0; o < out_; ++o) {
    T s = bias.value[o];
    for (int i = 0; i < in_; ++i) s += weight.value[o * in_ + i] * x[i];
    y[o] = s;
  }
  return y;
}

template <typename T>
std::vector<T> Linear<T>::forward(const std::vector<T>& x) {
  input_ = x;
  return apply(x);
}

template <typename T>
std::vector<T> Linear<T>::backward(const std::vector<T>& gy) {
  std::vector<T> gx(in_, T{0});
  for (int o = 0; o < out_; ++o) {
    bias.grad[o] += gy[o];
    for (int i = 0; i < in_; ++i) {
      weight.grad[o * in_ + i] += gy[o] * input_[i];
      gx[i] += gy[o] * weight.value[o * in_ + i];
    }
  }
  return gx;
}

template <typename T>
std::vector<T> global_average(const Tensor<T>& x) {
  std::vector<T> out(x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    double s = 0.0;
    for (T v : x.channel(c)) s += v;
    out[c] = static_cast<T>(s / static_cast<double>(x.plane()));
  }
  return out;
}

template <typename T>
Tensor<T> global_average_backward(const std::vector<T>& gy, int h, int w) {
  Tensor<T> gx(static_cast<int>(gy.size()), h, w);
  const T inv = T{1} / static_cast<T>(h * w);
  for (int c = 0; c < gx.channels(); ++c)
    for (T& v : gx.channel(c)) v = gy[c] * inv;
  return gx;
}

#define LGRN_INSTANTIATE(T)                                                \
  template struct Param<T>;                                                \
  template void export_params<T>(const ParamList<T>&, ModelParams&);       \
  template void import_params<T>(const ModelParams&, const ParamList<T>&); \
  template class Conv2d<T>;                                                \
  template class BatchNorm2d<T>;                                           \
  template class LeakyRelu<T>;                                             \
  template class MaxPool2<T>;                                              \
  template class UpConv2<T>;                                               \
  template class GaussianSmoother<T>;                                      \
  template class Linear<T>;                                                \
  template std::vector<T> global_average<T>(const Tensor<T>&);             \
  template Tensor<T> global_average_backward<T>(const std::vector<T>&, int, int);

LGRN_INSTANTIATE(float)
LGRN_INSTANTIATE(double)

#undef LGRN_INSTANTIATE

}  // namespace lgrn::nn
