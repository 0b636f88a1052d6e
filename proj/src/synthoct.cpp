#include "lgrn/synthoct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lgrn/error.hpp"

namespace lgrn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHarmonicMax = 0.03;        // per lumen harmonic, relative to radius
constexpr double kLumenOffsetFraction = 0.04;  // of image size
constexpr double kCoverDepthMax = 4.0;        // px a covered strut sits behind the lumen edge

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2 * kPi);
  if (a < 0) a += 2 * kPi;
  return a - kPi;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Bright spot that casts a radial shadow away from the catheter.
struct Caster {
  double x = 0, y = 0;
  double sigma_radial = 1, sigma_tangential = 1;
  double amplitude = 1;
  double shadow_depth = 0;
  double shadow_width = 1;  // tangential half-width in px at the caster
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

const std::vector<ConfigField<SynthConfig>>& SynthConfig::fields() {
  using C = SynthConfig;
  static const std::vector<ConfigField<C>> f = {
      {"image_size", "image side in pixels (multiple of 16)", &C::image_size},
      {"lumen_radius_min", "smallest lumen radius (px)", &C::lumen_radius_min},
      {"lumen_radius_max", "largest lumen radius (px)", &C::lumen_radius_max},
      {"wall_thickness_min", "thinnest vessel wall (px)", &C::wall_thickness_min},
      {"wall_thickness_max", "thickest vessel wall (px)", &C::wall_thickness_max},
      {"strut_count_min", "fewest struts per image", &C::strut_count_min},
      {"strut_count_max", "most struts per image", &C::strut_count_max},
      {"strut_bloom_sigma", "radial bloom sigma of a strut (px)", &C::strut_bloom_sigma},
      {"strut_min_separation", "minimum distance between struts (px)", &C::strut_min_separation},
      {"shadow_depth", "strut shadow attenuation in [0,1]", &C::shadow_depth},
      {"intima_coverage_prob", "probability a strut is buried under tissue", &C::intima_coverage_prob},
      {"speckle_strength", "multiplicative speckle scale", &C::speckle_strength},
      {"catheter_ring_radius", "catheter ring radius (px)", &C::catheter_ring_radius},
      {"guidewire_prob", "probability of a guidewire artifact", &C::guidewire_prob},
      {"distractor_count_min", "fewest bright tissue spots", &C::distractor_count_min},
      {"distractor_count_max", "most bright tissue spots", &C::distractor_count_max},
      {"rng_seed", "generator seed", &C::rng_seed},
  };
  return f;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("synth config: " + m); };
  if (image_size < 16 || image_size % 16) fail("image_size must be a positive multiple of 16");
  if (!(lumen_radius_min > 0) || lumen_radius_min > lumen_radius_max) fail("empty lumen radius range");
  if (!(wall_thickness_min > 0) || wall_thickness_min > wall_thickness_max) fail("empty wall thickness range");
  if (strut_count_min < 0 || strut_count_min > strut_count_max) fail("empty strut count range");
  if (distractor_count_min < 0 || distractor_count_min > distractor_count_max) fail("empty distractor range");
  if (!(strut_bloom_sigma > 0)) fail("strut_bloom_sigma must be positive");
  if (strut_min_separation < 2 * strut_bloom_sigma) fail("strut_min_separation must be >= 2 * strut_bloom_sigma");
  for (double p : {shadow_depth, intima_coverage_prob, guidewire_prob})
    if (p < 0 || p > 1) fail("probabilities and shadow_depth must lie in [0,1]");
  if (speckle_strength < 0) fail("speckle_strength must be non-negative");
  if (!(catheter_ring_radius > 0)) fail("catheter_ring_radius must be positive");
  const double reach = lumen_radius_max * (1 + 2 * kHarmonicMax) + kLumenOffsetFraction * image_size +
                       kCoverDepthMax + 4 * strut_bloom_sigma;
  if (reach >= image_size / 2.0) fail("lumen_radius_max leaves struts outside the image");
  if (catheter_ring_radius + kLumenOffsetFraction * image_size >= lumen_radius_min * (1 - 2 * kHarmonicMax))
    fail("catheter ring does not fit inside the lumen");
  const double circumference = 2 * kPi * lumen_radius_min * (1 - 2 * kHarmonicMax);
  if (strut_count_max * strut_min_separation > circumference) {
    std::ostringstream os;
    os << strut_count_max << " struts cannot fit on a lumen of radius " << lumen_radius_min
       << " at separation " << strut_min_separation;
    fail(os.str());
  }
}

float quantize16(double v) {
  const double q = std::round(std::clamp(v, 0.0, 1.0) * 65535.0);
  return static_cast<float>(q / 65535.0);
}

SynthSample generate_sample(const SynthConfig& cfg, int index) {
  cfg.validate();
  Rng rng(splitmix64(cfg.rng_seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  const int n = cfg.image_size;
  const double cx = n / 2.0, cy = n / 2.0;  // catheter centre

  // Lumen: offset circle with two low-order harmonics.
  const double off_r = rng.uniform(0, kLumenOffsetFraction * n);
  const double off_a = rng.uniform(-kPi, kPi);
  const double lx = cx + off_r * std::cos(off_a), ly = cy + off_r * std::sin(off_a);
  const double r0 = rng.uniform(cfg.lumen_radius_min, cfg.lumen_radius_max);
  const double a2 = rng.uniform(0, kHarmonicMax), p2 = rng.uniform(-kPi, kPi);
  const double a3 = rng.uniform(0, kHarmonicMax), p3 = rng.uniform(-kPi, kPi);
  auto lumen = [&](double th) { return r0 * (1 + a2 * std::cos(2 * th + p2) + a3 * std::cos(3 * th + p3)); };
  const double t0 = rng.uniform(cfg.wall_thickness_min, cfg.wall_thickness_max);
  const double b1 = rng.uniform(0, 0.25), q1 = rng.uniform(-kPi, kPi);
  auto wall = [&](double th) { return t0 * (1 + b1 * std::cos(th + q1)); };
  auto on_lumen = [&](double th, double dr) {
    const double r = lumen(th) + dr;
    return std::pair{lx + r * std::cos(th), ly + r * std::sin(th)};
  };

  auto make_caster = [&](double x, double y, double sigma, double amp, double depth, double width_scale) {
    Caster c;
    c.x = x;
    c.y = y;
    c.sigma_radial = sigma;
    c.sigma_tangential = 1.6 * sigma;
    c.amplitude = amp;
    c.shadow_depth = depth;
    c.shadow_width = width_scale * c.sigma_tangential;
    return c;
  };

  // Struts: jittered even spacing around the lumen, rejection on separation.
  const int k = rng.integer(cfg.strut_count_min, cfg.strut_count_max);
  std::vector<double> angles;
  std::vector<StrutPoint> points;
  std::vector<Caster> casters;
  if (k > 0) {
    const double spacing = 2 * kPi / k;
    const double arc = spacing * cfg.lumen_radius_min * (1 - 2 * kHarmonicMax);
    const double jitter = 0.5 * std::max(0.0, arc - 1.1 * cfg.strut_min_separation) / arc * spacing;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double phase = rng.uniform(-kPi, kPi);
      angles.clear();
      points.clear();
      bool ok = true;
      for (int i = 0; i < k && ok; ++i) {
        const double th = wrap_angle(phase + i * spacing + rng.uniform(-jitter, jitter));
        const auto [x, y] = on_lumen(th, 0.0);
        for (const auto& p : points)
          if (std::hypot(p.x - x, p.y - y) < cfg.strut_min_separation) ok = false;
        angles.push_back(th);
        points.push_back({x, y});
      }
      if (ok) break;
      if (attempt == 99) {
        angles.clear();
        points.clear();
      }
    }
    // Radial placement: exposed struts sit on the lumen edge, covered ones
    // behind a thin tissue layer at reduced contrast.
    for (std::size_t i = 0; i < angles.size(); ++i) {
      const bool covered = rng.chance(cfg.intima_coverage_prob);
      const double dr = covered ? rng.uniform(1.5, kCoverDepthMax) : -rng.uniform(0.0, 1.0);
      const auto [x, y] = on_lumen(angles[i], dr);
      points[i] = {x, y};
      const double amp = covered ? rng.uniform(0.35, 0.55) : rng.uniform(0.85, 1.0);
      const double depth = cfg.shadow_depth * (covered ? 0.8 : 1.0);
      casters.push_back(make_caster(x, y, cfg.strut_bloom_sigma, amp, depth, 1.2));
    }
  }

  // Guidewire: larger bloom inside the lumen, centred in the widest strut gap.
  if (rng.chance(cfg.guidewire_prob)) {
    double th = rng.uniform(-kPi, kPi);
    if (angles.size() >= 2) {
      std::vector<double> sorted = angles;
      std::sort(sorted.begin(), sorted.end());
      double best = -1;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double a = sorted[i];
        const double b = i + 1 < sorted.size() ? sorted[i + 1] : sorted[0] + 2 * kPi;
        if (b - a > best) {
          best = b - a;
          th = wrap_angle((a + b) / 2);
        }
      }
    }
    const double frac = rng.uniform(0.55, 0.85);
    const double r = lumen(th) * frac;
    casters.push_back(make_caster(lx + r * std::cos(th), ly + r * std::sin(th), 2.2 * cfg.strut_bloom_sigma,
                                  1.0, cfg.shadow_depth, 1.5));
  }

  // Bright tissue spots deep in the wall with a weaker shadow.
  const int distractors = rng.integer(cfg.distractor_count_min, cfg.distractor_count_max);
  for (int d = 0; d < distractors; ++d) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double th = rng.uniform(-kPi, kPi);
      const double depth_frac = rng.uniform(0.3, 0.8);
      const double sigma = cfg.strut_bloom_sigma * rng.uniform(0.9, 1.3);
      const double amp = rng.uniform(0.55, 0.85);
      const auto [x, y] = on_lumen(th, depth_frac * wall(th));
      bool ok = x > 2 && y > 2 && x < n - 3 && y < n - 3;
      for (const auto& p : points)
        if (std::hypot(p.x - x, p.y - y) < cfg.strut_min_separation) ok = false;
      if (!ok) continue;
      casters.push_back(make_caster(x, y, sigma, amp, 0.5 * cfg.shadow_depth, 1.0));
      break;
    }
  }

  // Shadow geometry relative to the catheter.
  struct ShadowTerm {
    double angle, rho, half_width, depth, onset;
  };
  std::vector<ShadowTerm> shadows;
  for (const auto& c : casters) {
    const double rho = std::hypot(c.x - cx, c.y - cy);
    shadows.push_back({std::atan2(c.y - cy, c.x - cx), rho, c.shadow_width / std::max(rho, 1.0), c.shadow_depth,
                       rho + 2.0 * c.sigma_radial});
  }

  Tensor<float> img(1, n, n);
  const double rc = cfg.catheter_ring_radius;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double dx = x - lx, dy = y - ly;
      const double r = std::hypot(dx, dy);
      const double th = std::atan2(dy, dx);
      const double rl = lumen(th), tw = wall(th);
      const double d = r - rl;
      const double edge = sigmoid(d / 0.8);
      const double tissue = 0.30 + 0.60 * std::exp(-std::max(d, 0.0) / (0.35 * tw));
      const double inside_wall = sigmoid((rl + tw - r) / (0.08 * tw));
      const double outer = 0.12 * std::exp(-std::max(r - rl - tw, 0.0) / (0.5 * tw));
      double v = 0.03 + edge * (tissue * inside_wall + outer * (1 - inside_wall));

      const double rr = std::hypot(x - cx, y - cy);
      v += 0.8 * std::exp(-(rr - rc) * (rr - rc) / 2.0);

      const double phi = std::atan2(y - cy, x - cx);
      for (const auto& s : shadows) {
        if (rr < s.onset - 4.0) continue;
        const double u = wrap_angle(phi - s.angle) / s.half_width;
        if (std::abs(u) > 3.0) continue;
        const double profile = std::exp(-u * u * u * u);
        v *= 1.0 - s.depth * profile * sigmoid(rr - s.onset);
      }
      img.at(y, x) = static_cast<float>(v);
    }
  }

  // Blooms, added after shadowing so the caster itself stays bright.
  for (const auto& c : casters) {
    const double reach = 4.0 * c.sigma_tangential;
    const double rho = std::max(std::hypot(c.x - cx, c.y - cy), 1e-9);
    const double ux = (c.x - cx) / rho, uy = (c.y - cy) / rho;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(c.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(c.y + reach)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double px = x - c.x, py = y - c.y;
        const double radial = px * ux + py * uy;
        const double tangential = -px * uy + py * ux;
        img.at(y, x) += static_cast<float>(
            c.amplitude * std::exp(-radial * radial / (2 * c.sigma_radial * c.sigma_radial) -
                                   tangential * tangential / (2 * c.sigma_tangential * c.sigma_tangential)));
      }
  }

  for (float& v : img.values())
    v = static_cast<float>(std::max(0.0, v * (1.0 + cfg.speckle_strength * rng.normal())));
  max_normalize(img);
  for (float& v : img.values()) v = quantize16(v);

  SynthSample out;
  out.index = index;
  out.image = {std::move(img), Provenance::kSynthetic};
  for (const auto& p : points)
    if (p.x >= 0 && p.y >= 0 && p.x <= n - 1 && p.y <= n - 1) out.points.points.push_back(p);
  return out;
}

HeatMap render_mask(const StrutPointSet& points, int height, int width, double footprint_radius) {
  if (footprint_radius < 1.0) throw UsageError("footprint radius must be >= 1");
  Tensor<float> m(1, height, width);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points.points[i];
    if (!(p.x >= 0 && p.y >= 0 && p.x <= width - 1 && p.y <= height - 1)) {
      std::ostringstream os;
      os << "point #" << i << " (" << p.x << ", " << p.y << ") lies outside the " << height << "x" << width
         << " grid";
      throw DataError(os.str());
    }
    const double r2 = footprint_radius * footprint_radius;
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - footprint_radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(p.x + footprint_radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - footprint_radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(p.y + footprint_radius)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y) <= r2) m.at(y, x) = 1.0f;
  }
  return {std::move(m), HeatRole::kTarget};
}

void max_normalize(Tensor<float>& grid) {
  float peak = 0.0f;
  for (float& v : grid.values()) {
    v = std::max(v, 0.0f);
    peak = std::max(peak, v);
  }
  if (peak > 0.0f)
    for (float& v : grid.values()) v = std::min(v / peak, 1.0f);
}

}  // namespace lgrn
