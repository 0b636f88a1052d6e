#pragma once

#include <vector>

#include "lgrn/tensor.hpp"

namespace lgrn {

/// Pixel-space location: x is the column, y the row. Sub-pixel precision.
struct StrutPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const StrutPoint&, const StrutPoint&) = default;
};

struct StrutPointSet {
  std::vector<StrutPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  friend bool operator==(const StrutPointSet&, const StrutPointSet&) = default;
};

enum class Provenance { kSynthetic, kExternal };

/// Max-normalized grayscale cross-section, intensities in [0, 1].
struct OctImage {
  Tensor<float> pixels;  // 1 x H x W
  Provenance provenance = Provenance::kSynthetic;

  int height() const { return pixels.height(); }
  int width() const { return pixels.width(); }
};

enum class HeatRole { kTarget, kPrediction };

/// Per-pixel strut likelihood. Targets are binary footprints; predictions are
/// raw network output.
struct HeatMap {
  Tensor<float> values;  // 1 x H x W
  HeatRole role = HeatRole::kPrediction;

  int height() const { return values.height(); }
  int width() const { return values.width(); }
};

/// Maximum normalization: divide by the largest intensity, clip negatives.
void max_normalize(Tensor<float>& grid);

}  // namespace lgrn
