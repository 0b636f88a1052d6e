#include "lgrn/globalnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgrn/error.hpp"

namespace lgrn {

namespace {

// Logit clamp; keeps the sigmoid strictly inside (0, 1) in double precision.
constexpr double kLogitLimit = 30.0;

const std::string& meta_value(const nn::ModelParams& params, const std::string& key) {
  auto it = params.meta.find(key);
  if (it == params.meta.end()) throw DataError("checkpoint lacks metadata '" + key + "'");
  return it->second;
}

int meta_int(const nn::ModelParams& params, const std::string& key) {
  try {
    return std::stoi(meta_value(params, key));
  } catch (const std::logic_error&) {
    throw DataError("checkpoint metadata '" + key + "' is not an integer");
  }
}

}  // namespace

// --- specs -----------------------------------------------------------------------

void GlobalNetSpec::validate() const {
  if (levels < 1) throw UsageError("global net needs at least one level");
  if (base_width < 1) throw UsageError("global net base width must be positive");
  if (in_channels < 1) throw UsageError("global net needs input channels");
}

void GlobalNetSpec::write_meta(nn::ModelParams& params) const {
  params.meta["global.levels"] = std::to_string(levels);
  params.meta["global.base_width"] = std::to_string(base_width);
  params.meta["global.in_channels"] = std::to_string(in_channels);
}

GlobalNetSpec GlobalNetSpec::from_meta(const nn::ModelParams& params) {
  GlobalNetSpec spec;
  spec.levels = meta_int(params, "global.levels");
  spec.base_width = meta_int(params, "global.base_width");
  spec.in_channels = meta_int(params, "global.in_channels");
  spec.validate();
  return spec;
}

void AttentionSpec::validate() const {
  if (n_layers < 1) throw UsageError("attention net needs at least one layer");
  if (base_width < 1) throw UsageError("attention base width must be positive");
}

void AttentionSpec::write_meta(nn::ModelParams& params) const {
  params.meta["attention.n_layers"] = std::to_string(n_layers);
  params.meta["attention.base_width"] = std::to_string(base_width);
  params.meta["attention.in_channels"] = std::to_string(in_channels);
}

AttentionSpec AttentionSpec::from_meta(const nn::ModelParams& params) {
  AttentionSpec spec;
  spec.n_layers = meta_int(params, "attention.n_layers");
  spec.base_width = meta_int(params, "attention.base_width");
  spec.in_channels = meta_int(params, "attention.in_channels");
  spec.validate();
  return spec;
}

// --- DualBranchBlock ---------------------------------------------------------------

template <typename T>
DualBranchBlock<T>::DualBranchBlock(const std::string& name, int in, int out)
    : regular(name + ".regular", {in, out, 3, 1, 1, 1, true}),
      dilated(name + ".dilated", {in, out, 3, 1, 2, 2, false}),
      name_(name) {}

template <typename T>
void DualBranchBlock<T>::init(std::mt19937_64& rng) {
  // Two summed branches: halve each branch's variance.
  regular.init(rng, 1.0);
  dilated.init(rng, 1.0);
}

template <typename T>
void DualBranchBlock<T>::collect(nn::ParamList<T>& out) {
  regular.collect(out);
  dilated.collect(out);
}

template <typename T>
void DualBranchBlock<T>::check_input(const Tensor<T>& x) const {
  if (x.channels() != regular.options().in)
    throw DataError("block '" + name_ + "' expects " + std::to_string(regular.options().in) +
                    " channels, got " + std::to_string(x.channels()));
}

template <typename T>
Tensor<T> DualBranchBlock<T>::apply(const Tensor<T>& x) const {
  check_input(x);
  Tensor<T> y = regular.apply(x);
  y += dilated.apply(x);
  return y;
}

template <typename T>
Tensor<T> DualBranchBlock<T>::forward(const Tensor<T>& x) {
  check_input(x);
  Tensor<T> y = regular.forward(x);
  y += dilated.forward(x);
  return y;
}

template <typename T>
Tensor<T> DualBranchBlock<T>::backward(const Tensor<T>& gy) {
  Tensor<T> gx = regular.backward(gy);
  gx += dilated.backward(gy);
  return gx;
}

// --- GlobalNet -----------------------------------------------------------------------

template <typename T>
GlobalNet<T>::GlobalNet(const GlobalNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  auto make_stage = [&](const std::string& name, int in, int out) {
    Stage s{DualBranchBlock<T>(name + ".block", in, out), nn::BatchNorm2d<T>(name + ".bn", out),
            nn::LeakyRelu<T>(0.0)};
    s.block.init(rng);
    return s;
  };
  int in = spec_.in_channels;
  for (int l = 0; l < spec_.levels; ++l) {
    encoder_.push_back(make_stage("global.enc" + std::to_string(l), in, spec_.width(l)));
    pools_.emplace_back();
    in = spec_.width(l);
  }
  bottleneck_ = make_stage("global.bottleneck", in, spec_.width(spec_.levels));
  ups_.resize(spec_.levels);
  decoder_.resize(spec_.levels);
  for (int l = spec_.levels - 1; l >= 0; --l) {
    const std::string id = std::to_string(l);
    ups_[l] = nn::UpConv2<T>("global.up" + id, spec_.width(l + 1), spec_.width(l));
    ups_[l].init(rng);
    decoder_[l] = make_stage("global.dec" + id, 2 * spec_.width(l), spec_.width(l));
  }
  head_ = nn::Conv2d<T>("global.head", {spec_.width(0), 1, 1, 1, 0, 1, true});
  head_.init(rng, 1.0);
}

template <typename T>
void GlobalNet<T>::check_input(const Tensor<T>& input) const {
  if (input.channels() != spec_.in_channels)
    throw DataError("global net expects " + std::to_string(spec_.in_channels) + " input channels");
  const int d = spec_.divisor();
  if (input.height() % d || input.width() % d || input.height() == 0 || input.width() == 0)
    throw DataError("global net input " + std::to_string(input.height()) + "x" +
                    std::to_string(input.width()) + " must be divisible by " + std::to_string(d) +
                    "; pad or crop the image");
}

template <typename T>
Tensor<T> GlobalNet<T>::apply(const Tensor<T>& input) const {
  check_input(input);
  auto run = [](const Stage& s, const Tensor<T>& x) { return s.relu.apply(s.bn.apply(s.block.apply(x))); };
  std::vector<Tensor<T>> skips;
  Tensor<T> x = input;
  for (int l = 0; l < spec_.levels; ++l) {
    skips.push_back(run(encoder_[l], x));
    x = pools_[l].apply(skips.back());
  }
  x = run(bottleneck_, x);
  for (int l = spec_.levels - 1; l >= 0; --l)
    x = run(decoder_[l], concat_channels(skips[l], ups_[l].apply(x)));
  return head_.apply(x);
}

template <typename T>
Tensor<T> GlobalNet<T>::forward(const Tensor<T>& input) {
  check_input(input);
  auto run = [](Stage& s, const Tensor<T>& x) {
    return s.relu.forward(s.bn.forward(s.block.forward(x)));
  };
  std::vector<Tensor<T>> skips;
  Tensor<T> x = input;
  for (int l = 0; l < spec_.levels; ++l) {
    skips.push_back(run(encoder_[l], x));
    x = pools_[l].forward(skips.back());
  }
  x = run(bottleneck_, x);
  for (int l = spec_.levels - 1; l >= 0; --l)
    x = run(decoder_[l], concat_channels(skips[l], ups_[l].forward(x)));
  return head_.forward(x);
}

template <typename T>
Tensor<T> GlobalNet<T>::backward(const Tensor<T>& grad) {
  auto back = [](Stage& s, const Tensor<T>& g) {
    return s.block.backward(s.bn.backward(s.relu.backward(g)));
  };
  std::vector<Tensor<T>> skip_grads(spec_.levels);
  Tensor<T> g = head_.backward(grad);
  for (int l = 0; l < spec_.levels; ++l) {
    const Tensor<T> gcat = back(decoder_[l], g);
    const int w = spec_.width(l);
    skip_grads[l] = slice_channels(gcat, 0, w);
    g = ups_[l].backward(slice_channels(gcat, w, gcat.channels() - w));
  }
  g = back(bottleneck_, g);
  for (int l = spec_.levels - 1; l >= 0; --l) {
    Tensor<T> genc = pools_[l].backward(g);
    genc += skip_grads[l];
    g = back(encoder_[l], genc);
  }
  return g;
}

template <typename T>
nn::ParamList<T> GlobalNet<T>::params() {
  nn::ParamList<T> out;
  auto add = [&](Stage& s) {
    s.block.collect(out);
    s.bn.collect(out);
  };
  for (Stage& s : encoder_) add(s);
  add(bottleneck_);
  for (int l = spec_.levels - 1; l >= 0; --l) {
    ups_[l].collect(out);
    add(decoder_[l]);
  }
  head_.collect(out);
  return out;
}

template <typename T>
nn::ModelParams GlobalNet<T>::export_params() const {
  nn::ModelParams out;
  nn::export_params(const_cast<GlobalNet*>(this)->params(), out);
  spec_.write_meta(out);
  return out;
}

template <typename T>
void GlobalNet<T>::import_params(const nn::ModelParams& params) {
  nn::import_params(params, this->params());
}

template <typename T>
void GlobalNet<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

// --- AttentionNet -------------------------------------------------------------------

template <typename T>
AttentionNet<T>::AttentionNet(const AttentionSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  int in = spec_.in_channels;
  for (int l = 0; l < spec_.n_layers; ++l) {
    convs_.emplace_back("attention.conv" + std::to_string(l), nn::ConvOptions{in, spec_.width(l), 3, 2, 1, 1, true});
    convs_.back().init(rng);
    acts_.emplace_back(0.2);
    in = spec_.width(l);
  }
  fc_ = nn::Linear<T>("attention.fc", in, 1);
  fc_.init(rng);
}

template <typename T>
Tensor<T> AttentionNet<T>::stack(const Tensor<T>& map, const Tensor<T>& image) const {
  if (map.height() != image.height() || map.width() != image.width() || map.channels() != 1 ||
      image.channels() != 1)
    throw DataError("attention input mismatch: map " + shape_string(map) + " vs image " +
                    shape_string(image));
  return concat_channels(map, image);
}

template <typename T>
double AttentionNet<T>::apply(const Tensor<T>& map, const Tensor<T>& image) const {
  Tensor<T> x = stack(map, image);
  for (std::size_t l = 0; l < convs_.size(); ++l) x = acts_[l].apply(convs_[l].apply(x));
  const double logit = fc_.apply(nn::global_average(x))[0];
  return 1.0 / (1.0 + std::exp(-std::clamp(logit, -kLogitLimit, kLogitLimit)));
}

template <typename T>
double AttentionNet<T>::forward(const Tensor<T>& map, const Tensor<T>& image) {
  Tensor<T> x = stack(map, image);
  for (std::size_t l = 0; l < convs_.size(); ++l) x = acts_[l].forward(convs_[l].forward(x));
  last_h_ = x.height();
  last_w_ = x.width();
  const double logit = fc_.forward(nn::global_average(x))[0];
  last_clamped_ = std::abs(logit) > kLogitLimit;
  last_score_ = 1.0 / (1.0 + std::exp(-std::clamp(logit, -kLogitLimit, kLogitLimit)));
  return last_score_;
}

template <typename T>
Tensor<T> AttentionNet<T>::backward(double d_score) {
  const double d_logit = last_clamped_ ? 0.0 : d_score * last_score_ * (1.0 - last_score_);
  const std::vector<T> gfeat = fc_.backward({static_cast<T>(d_logit)});
  Tensor<T> g = nn::global_average_backward(gfeat, last_h_, last_w_);
  for (std::size_t l = convs_.size(); l-- > 0;) g = convs_[l].backward(acts_[l].backward(g));
  return slice_channels(g, 0, 1);
}

template <typename T>
nn::ParamList<T> AttentionNet<T>::params() {
  nn::ParamList<T> out;
  for (auto& c : convs_) c.collect(out);
  fc_.collect(out);
  return out;
}

template <typename T>
nn::ModelParams AttentionNet<T>::export_params() const {
  nn::ModelParams out;
  nn::export_params(const_cast<AttentionNet*>(this)->params(), out);
  spec_.write_meta(out);
  return out;
}

template <typename T>
void AttentionNet<T>::import_params(const nn::ModelParams& params) {
  nn::import_params(params, this->params());
}

template <typename T>
void AttentionNet<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

// --- free functions ---------------------------------------------------------------

template <typename T>
Tensor<T> global_input(const Tensor<T>& image, const Tensor<T>* local_map) {
  if (local_map && (local_map->height() != image.height() || local_map->width() != image.width()))
    throw DataError("image " + shape_string(image) + " and local map " + shape_string(*local_map) +
                    " differ in size");
  Tensor<T> second(1, image.height(), image.width());
  if (local_map) {
    for (std::size_t i = 0; i < second.size(); ++i)
      second.data()[i] = std::clamp(local_map->data()[i], T{0}, T{1});
  }
  return concat_channels(image, second);
}

HeatMap global_forward(const nn::ModelParams& params, const OctImage& image, const HeatMap& local_map) {
  GlobalNet<float> net(GlobalNetSpec::from_meta(params));
  net.import_params(params);
  Tensor<float> out = net.apply(global_input(image.pixels, &local_map.values));
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return {std::move(out), HeatRole::kPrediction};
}

double attention_forward(const nn::ModelParams& params, const HeatMap& map, const OctImage& image) {
  AttentionNet<float> net(AttentionSpec::from_meta(params));
  net.import_params(params);
  return net.apply(map.values, image.pixels);
}

template class DualBranchBlock<float>;
template class DualBranchBlock<double>;
template class GlobalNet<float>;
template class GlobalNet<double>;
template class AttentionNet<float>;
template class AttentionNet<double>;
template Tensor<float> global_input<float>(const Tensor<float>&, const Tensor<float>*);
template Tensor<double> global_input<double>(const Tensor<double>&, const Tensor<double>*);

}  // namespace lgrn
