#include "lgrn/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lgrn/dataset.hpp"
#include "lgrn/error.hpp"

namespace lgrn {

namespace {

// Minimum-cost perfect assignment on an n x n matrix (row-major), potentials
// formulation. Returns the column assigned to each row.
std::vector<int> hungarian(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double safe_ratio(int num, int den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; }

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double MatchResult::total_distance() const {
  double s = 0;
  for (const auto& p : pairs) s += p.distance;
  return s;
}

MatchResult match_points(const StrutPointSet& pred, const StrutPointSet& gt, double tolerance) {
  if (!(tolerance > 0)) throw UsageError("match tolerance must be positive");
  const int np = static_cast<int>(pred.size());
  const int ng = static_cast<int>(gt.size());
  MatchResult out;
  if (np > 0 && ng > 0) {
    // Allowed pairs cost (distance - big); every other cell is 0. With
    // big > min(np, ng) * tolerance, cardinality dominates the distance sum.
    const int n = std::max(np, ng);
    const double big = tolerance * (std::min(np, ng) + 1) + 1.0;
    std::vector<double> cost(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> dist(static_cast<std::size_t>(np) * ng, 0.0);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < ng; ++j) {
        const double d = std::hypot(pred.points[i].x - gt.points[j].x, pred.points[i].y - gt.points[j].y);
        dist[static_cast<std::size_t>(i) * ng + j] = d;
        if (d <= tolerance) cost[static_cast<std::size_t>(i) * n + j] = d - big;
      }
    const auto assign = hungarian(cost, n);
    for (int i = 0; i < np; ++i) {
      const int j = assign[i];
      if (j < 0 || j >= ng) continue;
      const double d = dist[static_cast<std::size_t>(i) * ng + j];
      if (d <= tolerance) out.pairs.push_back({i, j, d});
    }
  }
  out.tp = static_cast<int>(out.pairs.size());
  out.fp = np - out.tp;
  out.fn = ng - out.tp;
  return out;
}

MetricsReport compute_metrics(const std::vector<ImageScore>& scores, const std::string& method,
                              const std::string& dataset) {
  if (scores.empty()) throw DataError("no images to score");
  MetricsReport r;
  r.method = method;
  r.dataset = dataset;
  for (const auto& s : scores) {
    ImageMetrics m{s.id, s.match.tp, s.match.fp, s.match.fn, safe_ratio(s.match.tp, s.match.tp + s.match.fn),
                   safe_ratio(s.match.tp, s.match.tp + s.match.fp)};
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
    r.images.push_back(m);
  }
  r.recall = safe_ratio(r.tp, r.tp + r.fn);
  r.precision = safe_ratio(r.tp, r.tp + r.fp);
  return r;
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "method,dataset,image,tp,fp,fn,recall,precision\n";
  auto row = [&](const std::string& id, int tp, int fp, int fn, double rec, double prec) {
    os << report.method << ',' << report.dataset << ',' << id << ',' << tp << ',' << fp << ',' << fn << ','
       << format_double(rec) << ',' << format_double(prec) << '\n';
  };
  for (const auto& m : report.images) row(m.id, m.tp, m.fp, m.fn, m.recall, m.precision);
  row("ALL", report.tp, report.fp, report.fn, report.recall, report.precision);
  return os.str();
}

std::string report_text(const MetricsReport& report) {
  std::ostringstream os;
  os << "method:    " << (report.method.empty() ? "-" : report.method) << '\n'
     << "dataset:   " << (report.dataset.empty() ? "-" : report.dataset) << '\n'
     << "images:    " << report.images.size() << '\n'
     << "TP/FP/FN:  " << report.tp << " / " << report.fp << " / " << report.fn << '\n'
     << "recall:    " << fixed(report.recall) << '\n'
     << "precision: " << fixed(report.precision) << '\n';
  for (const auto& [k, v] : report.config) os << "config " << k << " = " << v << '\n';
  os << "note: TP/FP/FN pooled over all images (micro-average); an empty denominator counts as 1.0\n";
  return os.str();
}

std::string comparison_table(const std::vector<MetricsReport>& reports) {
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.method.size());
  std::ostringstream os;
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  os << pad("Method") << " | Recall | Precision\n" << std::string(width, '-') << "-+--------+----------\n";
  for (const auto& r : reports) os << pad(r.method) << " |  " << fixed(r.recall) << " |     " << fixed(r.precision) << '\n';
  os << "(micro-averaged; empty denominators count as 1.0)\n";
  return os.str();
}

std::string comparison_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "method,recall,precision,tp,fp,fn\n";
  for (const auto& r : reports)
    os << r.method << ',' << format_double(r.recall) << ',' << format_double(r.precision) << ',' << r.tp << ','
       << r.fp << ',' << r.fn << '\n';
  return os.str();
}

std::map<std::string, StrutPointSet> ingest_external(const std::filesystem::path& dir,
                                                     const std::vector<std::string>& ids,
                                                     std::vector<std::string>* warnings) {
  if (!std::filesystem::is_directory(dir)) throw DataError("prediction directory " + dir.string() + " not found");
  std::map<std::string, StrutPointSet> out;
  for (const auto& id : ids) {
    const auto path = dir / (id + ".csv");
    if (!std::filesystem::exists(path)) {
      if (warnings) warnings->push_back("no predictions for " + id + " (" + path.string() + "); scoring as empty");
      out[id] = {};
      continue;
    }
    out[id] = read_points_csv(path).points;
  }
  return out;
}

const std::vector<ConfigField<EvalConfig>>& eval_fields() {
  static const std::vector<ConfigField<EvalConfig>> f = {
      {"tolerance", "match distance in pixels (inclusive)", &EvalConfig::tolerance},
  };
  return f;
}

}  // namespace lgrn
