#pragma once

#include <cstdint>
#include <vector>

#include "lgrn/config.hpp"
#include "lgrn/types.hpp"

namespace lgrn {

/// Synthetic intravascular cross-section phantom. Geometry is in pixels.
struct SynthConfig {
  int image_size = 512;
  double lumen_radius_min = 110.0;
  double lumen_radius_max = 165.0;
  double wall_thickness_min = 60.0;
  double wall_thickness_max = 100.0;
  int strut_count_min = 6;
  int strut_count_max = 14;
  double strut_bloom_sigma = 1.5;
  /// Minimum centre distance between struts; never below 2 * strut_bloom_sigma.
  double strut_min_separation = 10.0;
  double shadow_depth = 0.85;
  double intima_coverage_prob = 0.3;
  double speckle_strength = 0.15;
  double catheter_ring_radius = 18.0;
  double guidewire_prob = 1.0;
  int distractor_count_min = 0;
  int distractor_count_max = 3;
  std::uint64_t rng_seed = 7;

  /// Throws UsageError on any violated invariant, including strut counts that
  /// cannot fit on the smallest lumen circumference at the minimum separation.
  void validate() const;

  static const std::vector<ConfigField<SynthConfig>>& fields();
};

struct SynthSample {
  int index = 0;
  OctImage image;
  StrutPointSet points;
};

/// Pure function of (config, index): intensities are quantized to 16 bits so
/// the sample survives a lossless PNG round trip bit-exactly.
SynthSample generate_sample(const SynthConfig& config, int index);

/// Binary strut footprints: value 1 within footprint_radius (Euclidean,
/// inclusive) of any point, 0 elsewhere. Throws DataError naming a point that
/// lies outside the grid.
HeatMap render_mask(const StrutPointSet& points, int height, int width, double footprint_radius = 3.0);

/// Quantize intensities in [0, 1] onto the 16-bit grid k / 65535.
float quantize16(double v);

}  // namespace lgrn
