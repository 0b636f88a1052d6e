#include "lgrn/localnet.hpp"

#include <cmath>
#include <string>

#include "lgrn/error.hpp"
#include "lgrn/losses.hpp"

namespace lgrn {

int LocalNetSpec::smoother_radius() const {
  return static_cast<int>(std::ceil(3.0 * smoother_sigma));
}

void LocalNetSpec::validate() const {
  if (n_layers < 1) throw UsageError("local net needs at least one conv layer");
  if (channels < 1) throw UsageError("local net channel width must be positive");
  if (!(smoother_sigma > 0.0)) throw UsageError("local net smoother sigma must be positive");
  if (patch_size < min_input())
    throw UsageError("local patch size " + std::to_string(patch_size) + " is below the receptive field " +
                     std::to_string(min_input()));
}

void LocalNetSpec::write_meta(nn::ModelParams& params) const {
  params.meta["local.n_layers"] = std::to_string(n_layers);
  params.meta["local.channels"] = std::to_string(channels);
  params.meta["local.smoother_sigma"] = std::to_string(smoother_sigma);
  params.meta["local.patch_size"] = std::to_string(patch_size);
}

LocalNetSpec LocalNetSpec::from_meta(const nn::ModelParams& params) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = params.meta.find(key);
    if (it == params.meta.end()) throw DataError("checkpoint lacks local net metadata '" + key + "'");
    return it->second;
  };
  LocalNetSpec spec;
  try {
    spec.n_layers = std::stoi(get("local.n_layers"));
    spec.channels = std::stoi(get("local.channels"));
    spec.smoother_sigma = std::stod(get("local.smoother_sigma"));
    spec.patch_size = std::stoi(get("local.patch_size"));
  } catch (const std::logic_error&) {
    throw DataError("checkpoint has malformed local net metadata");
  }
  spec.validate();
  return spec;
}

template <typename T>
LocalNet<T>::LocalNet(const LocalNetSpec& spec, std::uint64_t seed)
    : spec_(spec), smoother_(spec.smoother_sigma) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  auto make_layer = [&](int index, int in) {
    const std::string id = std::to_string(index);
    Layer layer{nn::Conv2d<T>("local.conv" + id, {in, spec_.channels, 3, 1, 1, 1, false}),
                nn::BatchNorm2d<T>("local.bn" + id, spec_.channels), nn::LeakyRelu<T>(0.0)};
    layer.conv.init(rng);
    return layer;
  };
  stem_ = make_layer(0, 1);
  for (int i = 1; i < spec_.n_layers; i += 2) {
    Unit unit;
    unit.push_back(make_layer(i, spec_.channels));
    if (i + 1 < spec_.n_layers) unit.push_back(make_layer(i + 1, spec_.channels));
    units_.push_back(std::move(unit));
  }
  head_ = nn::Conv2d<T>("local.head", {spec_.channels, 1, 1, 1, 0, 1, true});
  head_.init(rng, 1.0);
}

template <typename T>
void LocalNet<T>::check_input(const Tensor<T>& image) const {
  if (image.channels() != 1) throw DataError("local net expects a single-channel image");
  if (image.height() < spec_.min_input() || image.width() < spec_.min_input())
    throw DataError("local net input " + shape_string(image) + " is smaller than the receptive field " +
                    std::to_string(spec_.min_input()));
}

template <typename T>
Tensor<T> LocalNet<T>::apply(const Tensor<T>& image) const {
  check_input(image);
  auto run = [](const Layer& l, const Tensor<T>& x) { return l.relu.apply(l.bn.apply(l.conv.apply(x))); };
  Tensor<T> x = run(stem_, image);
  for (const Unit& unit : units_) {
    Tensor<T> h = x;
    for (const Layer& l : unit) h = run(l, h);
    x += h;
  }
  return smoother_.apply(head_.apply(x));
}

template <typename T>
Tensor<T> LocalNet<T>::forward(const Tensor<T>& image) {
  check_input(image);
  auto run = [](Layer& l, const Tensor<T>& x) {
    return l.relu.forward(l.bn.forward(l.conv.forward(x)));
  };
  Tensor<T> x = run(stem_, image);
  for (Unit& unit : units_) {
    Tensor<T> h = x;
    for (Layer& l : unit) h = run(l, h);
    x += h;
  }
  return smoother_.apply(head_.forward(x));
}

template <typename T>
Tensor<T> LocalNet<T>::backward(const Tensor<T>& grad) {
  auto back = [](Layer& l, const Tensor<T>& g) {
    return l.conv.backward(l.bn.backward(l.relu.backward(g)));
  };
  Tensor<T> g = head_.backward(smoother_.backward(grad));
  for (auto u = units_.rbegin(); u != units_.rend(); ++u) {
    Tensor<T> gh = g;
    for (auto l = u->rbegin(); l != u->rend(); ++l) gh = back(*l, gh);
    g += gh;
  }
  return back(stem_, g);
}

template <typename T>
nn::ParamList<T> LocalNet<T>::params() {
  nn::ParamList<T> out;
  auto add = [&](Layer& l) {
    l.conv.collect(out);
    l.bn.collect(out);
  };
  add(stem_);
  for (Unit& unit : units_)
    for (Layer& l : unit) add(l);
  head_.collect(out);
  return out;
}

template <typename T>
nn::ModelParams LocalNet<T>::export_params() const {
  nn::ModelParams out;
  nn::export_params(const_cast<LocalNet*>(this)->params(), out);
  spec_.write_meta(out);
  return out;
}

template <typename T>
void LocalNet<T>::import_params(const nn::ModelParams& params) {
  nn::import_params(params, this->params());
}

template <typename T>
void LocalNet<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

HeatMap local_forward(const nn::ModelParams& params, const OctImage& image) {
  LocalNet<float> net(LocalNetSpec::from_meta(params));
  net.import_params(params);
  return {net.apply(image.pixels), HeatRole::kPrediction};
}

Tensor<float> gaussian_smooth(const Tensor<float>& map, double sigma) {
  return nn::GaussianSmoother<float>(sigma).apply(map);
}

template <typename T>
double local_train_step(LocalNet<T>& net, nn::Adam<T>& optimizer, const Tensor<T>& patch,
                        const Tensor<T>& target) {
  optimizer.zero_grad();
  const Tensor<T> pred = net.forward(patch);
  Tensor<T> grad;
  const double loss = l1_loss(pred, target, &grad);
  if (!std::isfinite(loss)) throw NumericError("non-finite local L1 loss");
  net.backward(grad);
  optimizer.step();
  return loss;
}

template class LocalNet<float>;
template class LocalNet<double>;
template double local_train_step<float>(LocalNet<float>&, nn::Adam<float>&, const Tensor<float>&,
                                        const Tensor<float>&);
template double local_train_step<double>(LocalNet<double>&, nn::Adam<double>&, const Tensor<double>&,
                                         const Tensor<double>&);

}  // namespace lgrn
