#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lgrn/config.hpp"
#include "lgrn/types.hpp"

namespace lgrn {

struct MatchPair {
  int pred = 0;
  int gt = 0;
  double distance = 0.0;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<MatchPair> pairs;

  double total_distance() const;
};

/// One-to-one matching restricted to pairs at distance <= tolerance
/// (inclusive). Maximizes the number of matches, then minimizes the summed
/// distance among maximum matchings (Hungarian assignment).
MatchResult match_points(const StrutPointSet& pred, const StrutPointSet& gt, double tolerance = 5.0);

struct ImageScore {
  std::string id;
  MatchResult match;
};

struct ImageMetrics {
  std::string id;
  int tp = 0, fp = 0, fn = 0;
  double recall = 1.0;
  double precision = 1.0;
};

/// Micro-averaged detection metrics. Empty denominators count as perfect
/// (recall 1 with no ground truth, precision 1 with no predictions).
struct MetricsReport {
  std::string method;
  std::string dataset;
  KeyValues config;
  std::vector<ImageMetrics> images;
  int tp = 0, fp = 0, fn = 0;
  double recall = 1.0;
  double precision = 1.0;
};

/// Throws DataError on an empty list.
MetricsReport compute_metrics(const std::vector<ImageScore>& scores, const std::string& method = "",
                              const std::string& dataset = "");

/// CSV: method,dataset,image,tp,fp,fn,recall,precision; aggregate row has image "ALL".
std::string report_csv(const MetricsReport& report);
std::string report_text(const MetricsReport& report);

/// Recall/precision table with one row per report (e.g. the component ablation).
std::string comparison_table(const std::vector<MetricsReport>& reports);
std::string comparison_csv(const std::vector<MetricsReport>& reports);

/// Load <dir>/<id>.csv for each id. Missing files become empty predictions and
/// add a message to warnings. Malformed files throw ParseError.
std::map<std::string, StrutPointSet> ingest_external(const std::filesystem::path& dir,
                                                     const std::vector<std::string>& ids,
                                                     std::vector<std::string>* warnings = nullptr);

struct EvalConfig {
  double tolerance = 5.0;
};

const std::vector<ConfigField<EvalConfig>>& eval_fields();

}  // namespace lgrn
