#pragma once

#include <memory>
#include <vector>

#include "lgrn/config.hpp"
#include "lgrn/globalnet.hpp"
#include "lgrn/localnet.hpp"
#include "lgrn/types.hpp"

namespace lgrn {

/// Overlapping patch layout for dense local detection. Each patch keeps its
/// interior [margin, patch_size - margin) at stitching time, except on sides
/// that touch the image border, which are kept in full.
struct TileGrid {
  int patch_size = 64;
  int stride = 40;
  int margin = 12;

  /// Coverage: stride <= patch_size - 2 * margin.
  void validate() const;
  /// Exactness: margin must absorb the network's border influence.
  void validate_for(const LocalNetSpec& spec) const;
};

struct Tile {
  Tensor<float> patch;
  int x0 = 0;
  int y0 = 0;
};

/// Patch origins along one axis of length n (last origin clamped to n - patch).
std::vector<int> tile_origins(int n, const TileGrid& grid);

/// Throws DataError when the image is smaller than a patch (pad it first).
std::vector<Tile> tile(const Tensor<float>& image, const TileGrid& grid);

/// Average the kept interiors of per-patch outputs onto an h x w canvas.
/// Throws std::logic_error if a pixel is left uncovered.
Tensor<float> stitch(const std::vector<Tile>& outputs, int height, int width, const TileGrid& grid);

struct ExtractionConfig {
  double threshold = 0.5;
  double min_separation = 4.0;
};

struct Detections {
  StrutPointSet points;
  std::vector<double> scores;  // descending, one per point
};

/// Peaks of the [0,1]-clamped map at or above threshold. Equal-valued
/// connected maxima (plateaus) collapse to their centroid; isolated maxima are
/// refined by a least-squares quadratic fit over the 3x3 neighbourhood.
/// Candidates are accepted greedily by score (ties: row-major order of the
/// peak pixel) and dropped when closer than min_separation to an accepted one.
Detections extract_points(const Tensor<float>& map, const ExtractionConfig& config);

enum class DetectMode { kLocalOnly, kGlobalOnly, kCombined };

const char* to_string(DetectMode mode);
DetectMode parse_detect_mode(const std::string& text);

struct DetectOptions {
  DetectMode mode = DetectMode::kCombined;
  bool tiled = false;
  TileGrid grid;
  ExtractionConfig extraction;
  int refine_passes = 1;
};

struct StageTiming {
  double local_ms = 0;
  double global_ms = 0;
  double extract_ms = 0;
};

struct DetectionResult {
  StrutPointSet points;
  std::vector<double> scores;
  HeatMap local_map;    // empty in global-only mode
  HeatMap refined_map;  // empty in local-only mode
  StageTiming timing;
};

/// Immutable inference bundle. detect() is const and safe to call concurrently.
class Detector {
 public:
  /// local may be null for global-only use; global may be null for local-only use.
  Detector(const nn::ModelParams* local, const nn::ModelParams* global);

  /// Dense local map via tile -> forward -> stitch, or one full-image pass.
  HeatMap local_map(const OctImage& image, bool tiled, const TileGrid& grid) const;
  /// Refined map (clamped to [0,1]); a null local map feeds a zero channel.
  HeatMap refine(const OctImage& image, const HeatMap* local_map, int passes) const;
  DetectionResult detect(const OctImage& image, const DetectOptions& options) const;

  bool has_local() const { return static_cast<bool>(local_); }
  bool has_global() const { return static_cast<bool>(global_); }

 private:
  std::shared_ptr<const LocalNet<float>> local_;
  std::shared_ptr<const GlobalNet<float>> global_;
};

DetectionResult detect(const nn::ModelParams& local_params, const nn::ModelParams& global_params,
                       const OctImage& image, const TileGrid& grid, const ExtractionConfig& extraction);

const std::vector<ConfigField<ExtractionConfig>>& extraction_fields();
const std::vector<ConfigField<TileGrid>>& tile_grid_fields();

}  // namespace lgrn
