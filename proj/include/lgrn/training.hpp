#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "lgrn/config.hpp"
#include "lgrn/globalnet.hpp"
#include "lgrn/localnet.hpp"
#include "lgrn/synthoct.hpp"

namespace lgrn {

struct TrainConfig {
  int epochs = 80;
  double learning_rate = 0.001;
  int batch_size = 1;
  double adv_weight = 0.1;
  std::uint64_t seed = 1;
  int checkpoint_every = 10;  // epochs; 0 keeps only the final weights
  int patches_per_image = 4;  // local stage, per epoch
  double fg_fraction = 0.5;   // share of strut-containing local patches
  double footprint_radius = 3.0;
  bool augment = true;        // random flips / transposes
  bool global_only = false;   // feed a zero local channel to the global net

  void validate() const;
  static const std::vector<ConfigField<TrainConfig>>& fields();
};

struct LossRecord {
  int epoch = 0;
  std::string split;      // "train" or "val"
  std::string loss_name;  // e.g. "l1", "similar", "attention_d", "attention_g"
  double value = 0.0;
};

/// CSV with header epoch,split,loss_name,value.
std::string loss_curve_csv(const std::vector<LossRecord>& records);

/// Training sample: image plus its binary target heatmap.
struct TrainingPair {
  Tensor<float> image;
  Tensor<float> target;
  int strut_count = 0;
  std::vector<StrutPoint> points;
};

std::vector<TrainingPair> make_training_pairs(const std::vector<SynthSample>& samples, double footprint_radius);

struct PatchDraw {
  int image = 0;
  int x0 = 0;
  int y0 = 0;
  bool wants_strut = false;
};

/// Draws fixed-size patches: with probability fg_fraction a patch around a
/// random strut, otherwise a patch with no strut footprint (rejection
/// sampling, falling back to any patch after a bounded number of tries).
class PatchSampler {
 public:
  PatchSampler(const std::vector<TrainingPair>& data, int patch_size, double fg_fraction, double footprint_radius,
               std::uint64_t seed);
  PatchDraw draw();
  /// True when the patch contains at least one strut centre.
  bool contains_strut(const PatchDraw& d) const;

 private:
  const std::vector<TrainingPair>& data_;
  int patch_;
  double fg_fraction_;
  double footprint_;
  std::vector<int> with_struts_;
  std::mt19937_64 rng_;
};

struct TrainOutputs {
  std::filesystem::path dir;  // empty: write nothing
  std::string prefix;         // file stem, e.g. "local"
  std::ostream* log = nullptr;
};

struct LocalTrainResult {
  nn::ModelParams params;
  std::vector<LossRecord> curve;
};

/// Train the local network on patches. Throws DataError for an empty dataset
/// and NumericError (after dumping state when outputs.dir is set) on a
/// non-finite loss.
LocalTrainResult train_local(const std::vector<TrainingPair>& train, const std::vector<TrainingPair>& validation,
                             const LocalNetSpec& spec, const TrainConfig& config, const TrainOutputs& outputs = {});

struct GlobalTrainResult {
  nn::ModelParams params;  // "global.*" and "attention.*" groups
  std::vector<LossRecord> curve;
};

/// Evaluation-mode local maps for every image (the frozen local stage).
std::vector<Tensor<float>> compute_local_maps(const nn::ModelParams& local_params,
                                              const std::vector<TrainingPair>& data);

/// Alternating discriminator / generator updates per sample with the local
/// network frozen. local_maps must align with train (ignored in global-only mode).
GlobalTrainResult train_global(const std::vector<TrainingPair>& train, const std::vector<Tensor<float>>& local_maps,
                               const std::vector<TrainingPair>& validation,
                               const std::vector<Tensor<float>>& validation_maps, const GlobalNetSpec& global_spec,
                               const AttentionSpec& attention_spec, const TrainConfig& config,
                               const TrainOutputs& outputs = {});

/// Apply the same flip/transpose (code 0..7) to a tensor.
template <typename T>
Tensor<T> orient(const Tensor<T>& x, int code);

const std::vector<ConfigField<LocalNetSpec>>& local_spec_fields();
const std::vector<ConfigField<GlobalNetSpec>>& global_spec_fields();
const std::vector<ConfigField<AttentionSpec>>& attention_spec_fields();

}  // namespace lgrn
