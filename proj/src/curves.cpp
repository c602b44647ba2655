#include "kghait/curves.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include <fmt/format.h>

#include "kghait/error.hpp"

namespace kghait {

CurveMetric parse_curve_metric(std::string_view name) {
  if (name == "hits10" || name == "H@10" || name == "h10") return CurveMetric::kHits10;
  if (name == "mr" || name == "MR") return CurveMetric::kMR;
  if (name == "mrr" || name == "MRR") return CurveMetric::kMRR;
  throw ConfigError("unknown curve metric '" + std::string(name) + "' (expected hits10, mr or mrr)");
}

std::string_view to_string(CurveMetric m) {
  switch (m) {
    case CurveMetric::kHits10: return "hits10";
    case CurveMetric::kMR: return "mr";
    case CurveMetric::kMRR: return "mrr";
  }
  return "unknown";
}

std::vector<CurvePoint> convergence_curve(const TrainingLog& log, CurveMetric metric,
                                          std::size_t every) {
  std::vector<CurvePoint> out;
  for (const auto& r : log.epochs) {
    if (!r.validation) continue;
    if (every > 1 && r.epoch % every != 0) continue;
    double v = 0.0;
    switch (metric) {
      case CurveMetric::kHits10: v = r.validation->hits10; break;
      case CurveMetric::kMR: v = r.validation->mr; break;
      case CurveMetric::kMRR: v = r.validation->mrr; break;
    }
    out.push_back({r.epoch, v});
  }
  if (out.empty()) {
    throw DataError("training log has no validation entries for " + std::string(to_string(metric)));
  }
  return out;
}

std::optional<std::size_t> epochs_to_within(const std::vector<CurvePoint>& curve,
                                            double fraction) {
  if (curve.empty()) return std::nullopt;
  const double last = curve.back().value;
  const double tol = fraction * std::abs(last);
  for (const auto& p : curve) {
    if (std::abs(p.value - last) <= tol) return p.epoch;
  }
  return curve.back().epoch;
}

void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& curves) {
  std::map<std::size_t, std::vector<std::optional<double>>> table;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (const auto& p : curves[c].second) {
      auto& row = table[p.epoch];
      row.resize(curves.size());
      row[c] = p.value;
    }
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path.string());
  out << "epoch";
  for (const auto& [label, _] : curves) out << ',' << label;
  out << '\n';
  for (auto& [epoch, row] : table) {
    row.resize(curves.size());
    out << epoch;
    for (const auto& v : row) {
      out << ',';
      if (v) out << fmt::format("{:.17g}", *v);
    }
    out << '\n';
  }
}

}  // namespace kghait
