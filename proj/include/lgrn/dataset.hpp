#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "lgrn/config.hpp"
#include "lgrn/synthoct.hpp"

namespace lgrn {

/// On-disk layout:
///   <dir>/images/NNNNN.png   16-bit grayscale
///   <dir>/points/NNNNN.csv   header "x,y", one point per row
///   <dir>/manifest           key = value dump of the generating SynthConfig
void write_dataset(const std::vector<SynthSample>& samples, const std::filesystem::path& dir,
                   const SynthConfig* config = nullptr);

/// Samples sorted by index. A missing or empty directory yields no samples.
std::vector<SynthSample> read_dataset(const std::filesystem::path& dir);

/// Manifest of a dataset directory, if present.
std::optional<KeyValues> read_manifest(const std::filesystem::path& dir);

struct ScoredPoints {
  StrutPointSet points;
  std::vector<double> scores;  // empty when the file has no score column
};

/// Header "x,y" or "x,y,score" when scores are given (same length as points).
void write_points_csv(const std::filesystem::path& path, const StrutPointSet& points,
                      const std::vector<double>* scores = nullptr);

/// Accepts both headers. Throws ParseError with path and line on bad rows.
ScoredPoints read_points_csv(const std::filesystem::path& path);

}  // namespace lgrn
