#include "lgrn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lgrn/error.hpp"

namespace lgrn {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

struct Candidate {
  double score;
  int y, x;  // peak pixel, for tie-breaking
  double px, py;
};

// Offset of the stationary point of a least-squares quadratic over the 3x3
// neighbourhood; zero when the fit is not a proper maximum.
std::pair<double, double> quadratic_offset(const Tensor<float>& m, int y, int x) {
  if (y < 1 || x < 1 || y >= m.height() - 1 || x >= m.width() - 1) return {0.0, 0.0};
  double f[3][3];
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) f[dy + 1][dx + 1] = std::clamp(m.at(y + dy, x + dx), 0.0f, 1.0f);
  double fx = 0, fy = 0, fxx = 0, fyy = 0;
  for (int i = 0; i < 3; ++i) {
    fx += f[i][2] - f[i][0];
    fy += f[2][i] - f[0][i];
    fxx += f[i][0] + f[i][2] - 2 * f[i][1];
    fyy += f[0][i] + f[2][i] - 2 * f[1][i];
  }
  fx /= 6;
  fy /= 6;
  fxx /= 3;
  fyy /= 3;
  const double fxy = (f[2][2] - f[2][0] - f[0][2] + f[0][0]) / 4;
  const double det = fxx * fyy - fxy * fxy;
  if (!(fxx < 0) || !(det > 0)) return {0.0, 0.0};
  const double ox = -(fyy * fx - fxy * fy) / det;
  const double oy = -(fxx * fy - fxy * fx) / det;
  return {std::clamp(ox, -0.5, 0.5), std::clamp(oy, -0.5, 0.5)};
}

}  // namespace

// --- tiling ---------------------------------------------------------------------

void TileGrid::validate() const {
  if (patch_size < 1 || stride < 1 || margin < 0) throw UsageError("tile grid values must be positive");
  if (stride > patch_size - 2 * margin)
    throw UsageError("tile stride " + std::to_string(stride) + " leaves gaps: need stride <= patch_size - 2 * margin = " +
                     std::to_string(patch_size - 2 * margin));
}

void TileGrid::validate_for(const LocalNetSpec& spec) const {
  validate();
  if (margin < spec.influence_radius())
    throw UsageError("tile margin " + std::to_string(margin) + " is below the local net's influence radius " +
                     std::to_string(spec.influence_radius()));
  if (patch_size < spec.min_input()) throw UsageError("tile patch is smaller than the local receptive field");
}

std::vector<int> tile_origins(int n, const TileGrid& grid) {
  std::vector<int> out;
  for (int o = 0; o + grid.patch_size < n; o += grid.stride) out.push_back(o);
  out.push_back(n - grid.patch_size);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Tile> tile(const Tensor<float>& image, const TileGrid& grid) {
  grid.validate();
  if (image.height() < grid.patch_size || image.width() < grid.patch_size)
    throw DataError("image " + shape_string(image) + " is smaller than the " + std::to_string(grid.patch_size) +
                    " px patch; pad it first");
  std::vector<Tile> out;
  const int p = grid.patch_size;
  for (int y0 : tile_origins(image.height(), grid))
    for (int x0 : tile_origins(image.width(), grid)) {
      Tile t{Tensor<float>(image.channels(), p, p), x0, y0};
      for (int c = 0; c < image.channels(); ++c)
        for (int y = 0; y < p; ++y)
          std::copy_n(&image(c, y0 + y, x0), p, &t.patch(c, y, 0));
      out.push_back(std::move(t));
    }
  return out;
}

Tensor<float> stitch(const std::vector<Tile>& outputs, int height, int width, const TileGrid& grid) {
  Tensor<double> sum(1, height, width);
  Tensor<int> count(1, height, width);
  for (const Tile& t : outputs) {
    const int ph = t.patch.height(), pw = t.patch.width();
    const int ky0 = t.y0 == 0 ? 0 : grid.margin;
    const int kx0 = t.x0 == 0 ? 0 : grid.margin;
    const int ky1 = t.y0 + ph == height ? ph : ph - grid.margin;
    const int kx1 = t.x0 + pw == width ? pw : pw - grid.margin;
    for (int y = ky0; y < ky1; ++y)
      for (int x = kx0; x < kx1; ++x) {
        sum.at(t.y0 + y, t.x0 + x) += t.patch.at(y, x);
        count.at(t.y0 + y, t.x0 + x) += 1;
      }
  }
  Tensor<float> out(1, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int n = count.at(y, x);
      if (n == 0)
        throw std::logic_error("stitch: pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                               ") is not covered by any kept patch interior");
      out.at(y, x) = static_cast<float>(sum.at(y, x) / n);
    }
  return out;
}

// --- peak extraction -------------------------------------------------------------

Detections extract_points(const Tensor<float>& map, const ExtractionConfig& config) {
  const int h = map.height(), w = map.width();
  auto value = [&](int y, int x) { return std::clamp(map.at(y, x), 0.0f, 1.0f); };
  const float thr = static_cast<float>(config.threshold);

  Tensor<std::uint8_t> is_max(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = value(y, x);
      if (v < thr || v <= 0.0f) continue;
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if ((dy || dx) && yy >= 0 && xx >= 0 && yy < h && xx < w && value(yy, xx) > v) {
            peak = false;
            break;
          }
        }
      is_max.at(y, x) = peak;
    }

  // Group equal-valued 8-connected maxima; row-major scan makes the first
  // pixel of each group its tie-break key.
  std::vector<Candidate> candidates;
  Tensor<std::uint8_t> seen(1, h, w);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!is_max.at(y, x) || seen.at(y, x)) continue;
      const float v = value(y, x);
      double sx = 0, sy = 0;
      int n = 0;
      stack.assign(1, {y, x});
      seen.at(y, x) = 1;
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        sx += cx;
        sy += cy;
        ++n;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = cy + dy, xx = cx + dx;
            if (yy < 0 || xx < 0 || yy >= h || xx >= w || seen.at(yy, xx) || !is_max.at(yy, xx)) continue;
            if (value(yy, xx) != v) continue;
            seen.at(yy, xx) = 1;
            stack.emplace_back(yy, xx);
          }
      }
      Candidate c{v, y, x, sx / n, sy / n};
      if (n == 1) {
        const auto [ox, oy] = quadratic_offset(map, y, x);
        c.px = x + ox;
        c.py = y + oy;
      }
      candidates.push_back(c);
    }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });

  Detections out;
  const double sep2 = config.min_separation * config.min_separation;
  for (const Candidate& c : candidates) {
    bool clear = true;
    for (const auto& p : out.points.points) {
      const double dx = p.x - c.px, dy = p.y - c.py;
      if (dx * dx + dy * dy < sep2) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    out.points.points.push_back({c.px, c.py});
    out.scores.push_back(c.score);
  }
  return out;
}

// --- detection -------------------------------------------------------------------

const char* to_string(DetectMode mode) {
  switch (mode) {
    case DetectMode::kLocalOnly: return "local";
    case DetectMode::kGlobalOnly: return "global";
    case DetectMode::kCombined: return "combined";
  }
  return "?";
}

DetectMode parse_detect_mode(const std::string& text) {
  if (text == "local") return DetectMode::kLocalOnly;
  if (text == "global") return DetectMode::kGlobalOnly;
  if (text == "combined") return DetectMode::kCombined;
  throw UsageError("unknown detection mode '" + text + "' (expected local, global or combined)");
}

Detector::Detector(const nn::ModelParams* local, const nn::ModelParams* global) {
  if (local) {
    auto net = std::make_shared<LocalNet<float>>(LocalNetSpec::from_meta(*local));
    net->import_params(*local);
    local_ = std::move(net);
  }
  if (global) {
    auto net = std::make_shared<GlobalNet<float>>(GlobalNetSpec::from_meta(*global));
    net->import_params(*global);
    global_ = std::move(net);
  }
}

HeatMap Detector::local_map(const OctImage& image, bool tiled, const TileGrid& grid) const {
  if (!local_) throw UsageError("local-network weights are required");
  if (!tiled) return {local_->apply(image.pixels), HeatRole::kPrediction};
  grid.validate_for(local_->spec());
  std::vector<Tile> tiles = tile(image.pixels, grid);
  for (Tile& t : tiles) t.patch = local_->apply(t.patch);
  return {stitch(tiles, image.height(), image.width(), grid), HeatRole::kPrediction};
}

HeatMap Detector::refine(const OctImage& image, const HeatMap* local_map, int passes) const {
  if (!global_) throw UsageError("global-network weights are required");
  if (passes < 1) throw UsageError("refine passes must be >= 1");
  Tensor<float> current;
  const Tensor<float>* feed = local_map ? &local_map->values : nullptr;
  for (int pass = 0; pass < passes; ++pass) {
    current = global_->apply(global_input(image.pixels, feed));
    for (float& v : current.values()) v = std::clamp(v, 0.0f, 1.0f);
    feed = &current;
  }
  return {std::move(current), HeatRole::kPrediction};
}

DetectionResult Detector::detect(const OctImage& image, const DetectOptions& options) const {
  using clock = std::chrono::steady_clock;
  DetectionResult result;
  auto t0 = clock::now();
  if (options.mode != DetectMode::kGlobalOnly) {
    result.local_map = local_map(image, options.tiled, options.grid);
    result.timing.local_ms = elapsed_ms(t0);
  }
  if (options.mode != DetectMode::kLocalOnly) {
    t0 = clock::now();
    const HeatMap* feed = options.mode == DetectMode::kCombined ? &result.local_map : nullptr;
    result.refined_map = refine(image, feed, options.refine_passes);
    result.timing.global_ms = elapsed_ms(t0);
  }
  t0 = clock::now();
  const Tensor<float>& source =
      options.mode == DetectMode::kLocalOnly ? result.local_map.values : result.refined_map.values;
  Detections d = extract_points(source, options.extraction);
  result.points = std::move(d.points);
  result.scores = std::move(d.scores);
  result.timing.extract_ms = elapsed_ms(t0);
  return result;
}

DetectionResult detect(const nn::ModelParams& local_params, const nn::ModelParams& global_params,
                       const OctImage& image, const TileGrid& grid, const ExtractionConfig& extraction) {
  Detector detector(&local_params, &global_params);
  DetectOptions options;
  options.tiled = true;
  options.grid = grid;
  options.extraction = extraction;
  return detector.detect(image, options);
}

const std::vector<ConfigField<ExtractionConfig>>& extraction_fields() {
  using C = ExtractionConfig;
  static const std::vector<ConfigField<C>> f = {
      {"threshold", "minimum peak value for a detection", &C::threshold},
      {"min_separation", "minimum distance between detections (px)", &C::min_separation},
  };
  return f;
}

const std::vector<ConfigField<TileGrid>>& tile_grid_fields() {
  using C = TileGrid;
  static const std::vector<ConfigField<C>> f = {
      {"tile.patch_size", "local inference patch side (px)", &C::patch_size},
      {"tile.stride", "distance between patch origins (px)", &C::stride},
      {"tile.margin", "border discarded per patch when stitching (px)", &C::margin},
  };
  return f;
}

}  // namespace lgrn
