#include "lgrn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lgrn/adam.hpp"
#include "lgrn/checkpoint.hpp"
#include "lgrn/error.hpp"
#include "lgrn/fileutil.hpp"
#include "lgrn/losses.hpp"

namespace lgrn {

namespace fs = std::filesystem;

// --- configuration -----------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
  if (batch_size != 1) throw UsageError("only batch_size = 1 is supported");
  if (adv_weight < 0) throw UsageError("adv_weight must be non-negative");
  if (checkpoint_every < 0) throw UsageError("checkpoint_every must be non-negative");
  if (patches_per_image < 1) throw UsageError("patches_per_image must be >= 1");
  if (fg_fraction < 0 || fg_fraction > 1) throw UsageError("fg_fraction must lie in [0,1]");
  if (footprint_radius < 1) throw UsageError("footprint_radius must be >= 1");
}

const std::vector<ConfigField<TrainConfig>>& TrainConfig::fields() {
  using C = TrainConfig;
  static const std::vector<ConfigField<C>> f = {
      {"epochs", "training epochs", &C::epochs},
      {"learning_rate", "Adam learning rate (constant)", &C::learning_rate},
      {"batch_size", "samples per step (only 1 is supported)", &C::batch_size},
      {"adv_weight", "weight of the adversarial term in the global loss", &C::adv_weight},
      {"seed", "seed for initialization, sampling and augmentation", &C::seed},
      {"checkpoint_every", "epochs between checkpoints (0 = final only)", &C::checkpoint_every},
      {"patches_per_image", "local patches drawn per image per epoch", &C::patches_per_image},
      {"fg_fraction", "share of strut-containing local patches", &C::fg_fraction},
      {"footprint_radius", "target disk radius around each strut (px)", &C::footprint_radius},
      {"augment", "random flips and transposes", &C::augment},
      {"global_only", "train the global net without the local channel", &C::global_only},
  };
  return f;
}

const std::vector<ConfigField<LocalNetSpec>>& local_spec_fields() {
  using C = LocalNetSpec;
  static const std::vector<ConfigField<C>> f = {
      {"local.n_layers", "3x3 conv layers in the local net", &C::n_layers},
      {"local.channels", "hidden channel width of the local net", &C::channels},
      {"local.smoother_sigma", "output Gaussian sigma (px)", &C::smoother_sigma},
      {"local.patch_size", "training patch side (px)", &C::patch_size},
  };
  return f;
}

const std::vector<ConfigField<GlobalNetSpec>>& global_spec_fields() {
  using C = GlobalNetSpec;
  static const std::vector<ConfigField<C>> f = {
      {"global.levels", "down/up-sampling levels", &C::levels},
      {"global.base_width", "channels at the first level (doubles per level)", &C::base_width},
  };
  return f;
}

const std::vector<ConfigField<AttentionSpec>>& attention_spec_fields() {
  using C = AttentionSpec;
  static const std::vector<ConfigField<C>> f = {
      {"attention.n_layers", "stride-2 conv layers in the discriminator", &C::n_layers},
      {"attention.base_width", "channels of the first discriminator layer", &C::base_width},
  };
  return f;
}

std::string loss_curve_csv(const std::vector<LossRecord>& records) {
  std::ostringstream os;
  os << "epoch,split,loss_name,value\n";
  for (const auto& r : records) os << r.epoch << ',' << r.split << ',' << r.loss_name << ',' << format_double(r.value) << '\n';
  return os.str();
}

// --- data ------------------------------------------------------------------------------

std::vector<TrainingPair> make_training_pairs(const std::vector<SynthSample>& samples, double footprint_radius) {
  std::vector<TrainingPair> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    TrainingPair p;
    p.image = s.image.pixels;
    p.target = render_mask(s.points, s.image.height(), s.image.width(), footprint_radius).values;
    p.strut_count = static_cast<int>(s.points.size());
    p.points = s.points.points;
    out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
Tensor<T> orient(const Tensor<T>& x, int code) {
  const bool hflip = code & 1, vflip = code & 2;
  const bool transpose = (code & 4) && x.height() == x.width();
  Tensor<T> out(x.channels(), transpose ? x.width() : x.height(), transpose ? x.height() : x.width());
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) {
        const int sy = vflip ? x.height() - 1 - y : y;
        const int sx = hflip ? x.width() - 1 - xx : xx;
        if (transpose) out(c, xx, y) = x(c, sy, sx);
        else out(c, y, xx) = x(c, sy, sx);
      }
  return out;
}

PatchSampler::PatchSampler(const std::vector<TrainingPair>& data, int patch_size, double fg_fraction,
                           double footprint_radius, std::uint64_t seed)
    : data_(data), patch_(patch_size), fg_fraction_(fg_fraction), footprint_(footprint_radius), rng_(seed) {
  if (data.empty()) throw DataError("cannot sample patches from an empty dataset");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].image.height() < patch_ || data[i].image.width() < patch_)
      throw DataError("training image " + std::to_string(i) + " is smaller than the patch size");
    if (data[i].strut_count > 0) with_struts_.push_back(static_cast<int>(i));
  }
}

bool PatchSampler::contains_strut(const PatchDraw& d) const {
  for (const auto& p : data_[d.image].points)
    if (p.x >= d.x0 && p.x <= d.x0 + patch_ - 1 && p.y >= d.y0 && p.y <= d.y0 + patch_ - 1) return true;
  return false;
}

PatchDraw PatchSampler::draw() {
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); };
  const bool want_fg = std::uniform_real_distribution<double>(0, 1)(rng_) < fg_fraction_;
  PatchDraw d;
  d.wants_strut = want_fg;
  if (want_fg && !with_struts_.empty()) {
    d.image = with_struts_[uniform_int(0, static_cast<int>(with_struts_.size()) - 1)];
    const TrainingPair& tp = data_[d.image];
    const auto& p = tp.points[uniform_int(0, static_cast<int>(tp.points.size()) - 1)];
    // Keep the strut at least 4 px inside the patch.
    const int inset = std::min(4, patch_ / 4);
    auto range = [&](double c, int extent) {
      const int lo = std::clamp(static_cast<int>(std::ceil(c)) - patch_ + 1 + inset, 0, extent - patch_);
      const int hi = std::clamp(static_cast<int>(std::floor(c)) - inset, 0, extent - patch_);
      return std::pair{std::min(lo, hi), std::max(lo, hi)};
    };
    const auto [xl, xh] = range(p.x, tp.image.width());
    const auto [yl, yh] = range(p.y, tp.image.height());
    d.x0 = uniform_int(xl, xh);
    d.y0 = uniform_int(yl, yh);
    return d;
  }
  // Background: no strut footprint may reach into the patch.
  for (int attempt = 0; attempt < 64; ++attempt) {
    d.image = uniform_int(0, static_cast<int>(data_.size()) - 1);
    const TrainingPair& tp = data_[d.image];
    d.x0 = uniform_int(0, tp.image.width() - patch_);
    d.y0 = uniform_int(0, tp.image.height() - patch_);
    bool clear = true;
    for (const auto& p : tp.points)
      if (p.x >= d.x0 - footprint_ && p.x <= d.x0 + patch_ - 1 + footprint_ && p.y >= d.y0 - footprint_ &&
          p.y <= d.y0 + patch_ - 1 + footprint_)
        clear = false;
    if (clear) break;
  }
  return d;
}

namespace {

Tensor<float> crop(const Tensor<float>& src, int x0, int y0, int size) {
  Tensor<float> out(src.channels(), size, size);
  for (int c = 0; c < src.channels(); ++c)
    for (int y = 0; y < size; ++y) std::copy_n(&src(c, y0 + y, x0), size, &out(c, y, 0));
  return out;
}

void log_line(const TrainOutputs& out, const std::string& text) {
  if (out.log) *out.log << text << std::endl;
}

void write_curve(const TrainOutputs& out, const std::vector<LossRecord>& curve) {
  if (out.dir.empty()) return;
  write_text_atomic(out.dir / (out.prefix + "_loss.csv"), loss_curve_csv(curve));
}

void save_stage(const TrainOutputs& out, const std::string& suffix, nn::ModelParams params, int epoch,
                double loss) {
  if (out.dir.empty()) return;
  params.epoch = epoch;
  params.loss = loss;
  save_checkpoint(out.dir / (out.prefix + suffix + ".ckpt"), params);
}

[[noreturn]] void numeric_failure(const TrainOutputs& out, const nn::ModelParams& state, int epoch,
                                  const std::string& where) {
  std::string msg = "non-finite loss at epoch " + std::to_string(epoch) + ", " + where;
  if (!out.dir.empty()) {
    const fs::path dump = out.dir / (out.prefix + "_nonfinite_state.ckpt");
    try {
      nn::ModelParams copy = state;
      for (auto& [name, arr] : copy.arrays)
        for (double& v : arr.values)
          if (!std::isfinite(v)) v = 0.0;
      copy.meta["dump.reason"] = msg;
      save_checkpoint(dump, copy);
      msg += "; state dumped to " + dump.string();
    } catch (const std::exception&) {
    }
  }
  throw NumericError(msg);
}

}  // namespace

// --- local stage --------------------------------------------------------------------------

LocalTrainResult train_local(const std::vector<TrainingPair>& train, const std::vector<TrainingPair>& validation,
                             const LocalNetSpec& spec, const TrainConfig& config, const TrainOutputs& outputs) {
  config.validate();
  spec.validate();
  if (train.empty()) throw DataError("local training needs at least one sample");

  LocalNet<float> net(spec, config.seed);
  nn::Adam<float> optimizer(net.params(), {config.learning_rate});
  PatchSampler sampler(train, spec.patch_size, config.fg_fraction, config.footprint_radius, config.seed + 1);
  std::mt19937_64 aug_rng(config.seed + 2);

  LocalTrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(train.size()) * config.patches_per_image;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double sum = 0.0;
    for (int step = 0; step < steps; ++step) {
      const PatchDraw d = sampler.draw();
      Tensor<float> patch = crop(train[d.image].image, d.x0, d.y0, spec.patch_size);
      Tensor<float> target = crop(train[d.image].target, d.x0, d.y0, spec.patch_size);
      if (config.augment) {
        const int code = static_cast<int>(aug_rng() % 8);
        patch = orient(patch, code);
        target = orient(target, code);
      }
      double loss = 0.0;
      try {
        loss = local_train_step(net, optimizer, patch, target);
      } catch (const NumericError&) {
        numeric_failure(outputs, net.export_params(), epoch, "patch " + std::to_string(step));
      }
      sum += loss;
    }
    const double mean = sum / steps;
    result.curve.push_back({epoch, "train", "l1", mean});
    std::string line = "local epoch " + std::to_string(epoch) + " train l1 " + format_double(mean);

    if (!validation.empty()) {
      double vsum = 0.0;
      for (const auto& v : validation) vsum += l1_loss(net.apply(v.image), v.target);
      const double vmean = vsum / static_cast<double>(validation.size());
      result.curve.push_back({epoch, "val", "l1", vmean});
      line += " val l1 " + format_double(vmean);
      if (vmean < best_val) {
        best_val = vmean;
        save_stage(outputs, "_best", net.export_params(), epoch, vmean);
      }
    }
    log_line(outputs, line);
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 && epoch != config.epochs)
      save_stage(outputs, "_epoch" + std::to_string(epoch), net.export_params(), epoch, mean);
    write_curve(outputs, result.curve);
  }
  result.params = net.export_params();
  result.params.epoch = config.epochs;
  result.params.loss = result.curve.empty() ? 0.0 : result.curve.back().value;
  save_stage(outputs, "", result.params, result.params.epoch, result.params.loss);
  return result;
}

// --- global stage --------------------------------------------------------------------------

std::vector<Tensor<float>> compute_local_maps(const nn::ModelParams& local_params,
                                              const std::vector<TrainingPair>& data) {
  LocalNet<float> net(LocalNetSpec::from_meta(local_params));
  net.import_params(local_params);
  std::vector<Tensor<float>> maps;
  maps.reserve(data.size());
  for (const auto& d : data) maps.push_back(net.apply(d.image));
  return maps;
}

GlobalTrainResult train_global(const std::vector<TrainingPair>& train, const std::vector<Tensor<float>>& local_maps,
                               const std::vector<TrainingPair>& validation,
                               const std::vector<Tensor<float>>& validation_maps, const GlobalNetSpec& global_spec,
                               const AttentionSpec& attention_spec, const TrainConfig& config,
                               const TrainOutputs& outputs) {
  config.validate();
  if (train.empty()) throw DataError("global training needs at least one sample");
  if (!config.global_only && local_maps.size() != train.size())
    throw DataError("local maps do not align with the training set");
  if (!config.global_only && !validation.empty() && validation_maps.size() != validation.size())
    throw DataError("local maps do not align with the validation set");

  GlobalNet<float> gnet(global_spec, config.seed);
  AttentionNet<float> anet(attention_spec, config.seed + 3);
  nn::Adam<float> gopt(gnet.params(), {config.learning_rate});
  nn::Adam<float> aopt(anet.params(), {config.learning_rate});
  std::mt19937_64 rng(config.seed + 4);

  auto export_all = [&] {
    nn::ModelParams p = gnet.export_params();
    p.merge(anet.export_params());
    p.meta["global.global_only"] = config.global_only ? "true" : "false";
    return p;
  };

  GlobalTrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum_sim = 0.0, sum_d = 0.0, sum_g = 0.0;
    for (int i : order) {
      const TrainingPair& tp = train[i];
      Tensor<float> image = tp.image;
      Tensor<float> target = tp.target;
      Tensor<float> local = config.global_only ? Tensor<float>() : local_maps[i];
      if (config.augment) {
        const int code = static_cast<int>(rng() % 8);
        image = orient(image, code);
        target = orient(target, code);
        if (!local.empty()) local = orient(local, code);
      }
      const Tensor<float> input = global_input(image, local.empty() ? nullptr : &local);
      const Tensor<float> pred = gnet.forward(input);

      // Discriminator: ascend log A(M,I) + log(1 - A(P,I)) with P held fixed.
      aopt.zero_grad();
      double d_real = 0.0, d_fake = 0.0;
      const double a_real = anet.forward(target, image);
      const double a_fake = anet.forward(pred, image);
      const double loss_d = loss_attention_discriminator(a_real, a_fake, &d_real, &d_fake);
      anet.forward(target, image);
      anet.backward(d_real);
      anet.forward(pred, image);
      anet.backward(d_fake);
      aopt.step();

      // Generator: balanced L1 plus the non-saturating adversarial term.
      gopt.zero_grad();
      Tensor<float> grad;
      const double loss_sim = loss_similar(pred, target, &grad);
      double loss_g = 0.0;
      if (config.adv_weight > 0) {
        double d_gen = 0.0;
        loss_g = loss_attention_generator(anet.forward(pred, image), &d_gen);
        const Tensor<float> gp = anet.backward(d_gen);
        const float w = static_cast<float>(config.adv_weight);
        for (std::size_t k = 0; k < grad.size(); ++k) grad.data()[k] += w * gp.data()[k];
        anet.zero_grad();
      }
      if (!std::isfinite(loss_sim) || !std::isfinite(loss_d) || !std::isfinite(loss_g))
        numeric_failure(outputs, export_all(), epoch, "sample " + std::to_string(i));
      gnet.backward(grad);
      gopt.step();
      sum_sim += loss_sim;
      sum_d += loss_d;
      sum_g += loss_g;
    }
    const double n = static_cast<double>(train.size());
    result.curve.push_back({epoch, "train", "similar", sum_sim / n});
    result.curve.push_back({epoch, "train", "attention_d", sum_d / n});
    result.curve.push_back({epoch, "train", "attention_g", sum_g / n});
    std::string line = "global epoch " + std::to_string(epoch) + " similar " + format_double(sum_sim / n) +
                       " attention_d " + format_double(sum_d / n) + " attention_g " + format_double(sum_g / n);
    if (!validation.empty()) {
      double vsum = 0.0;
      for (std::size_t k = 0; k < validation.size(); ++k) {
        const Tensor<float>* lm = config.global_only ? nullptr : &validation_maps[k];
        vsum += loss_similar(gnet.apply(global_input(validation[k].image, lm)), validation[k].target);
      }
      const double vmean = vsum / static_cast<double>(validation.size());
      result.curve.push_back({epoch, "val", "similar", vmean});
      line += " val similar " + format_double(vmean);
      if (vmean < best_val) {
        best_val = vmean;
        save_stage(outputs, "_best", export_all(), epoch, vmean);
      }
    }
    log_line(outputs, line);
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 && epoch != config.epochs)
      save_stage(outputs, "_epoch" + std::to_string(epoch), export_all(), epoch, sum_sim / n);
    write_curve(outputs, result.curve);
  }
  result.params = export_all();
  result.params.epoch = config.epochs;
  double last_sim = 0.0;
  for (const auto& r : result.curve)
    if (r.split == "train" && r.loss_name == "similar") last_sim = r.value;
  result.params.loss = last_sim;
  save_stage(outputs, "", result.params, result.params.epoch, result.params.loss);
  return result;
}

template Tensor<float> orient<float>(const Tensor<float>&, int);
template Tensor<double> orient<double>(const Tensor<double>&, int);

}  // namespace lgrn
