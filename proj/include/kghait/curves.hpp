#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "kghait/training_log.hpp"

namespace kghait {

enum class CurveMetric { kHits10, kMR, kMRR };

CurveMetric parse_curve_metric(std::string_view name);
std::string_view to_string(CurveMetric m);

struct CurvePoint {
  std::size_t epoch = 0;
  double value = 0.0;
};

/// Validation entries of the log at epochs divisible by `every` (every 0 or 1
/// keeps all of them). Throws DataError when the log has no validation data.
std::vector<CurvePoint> convergence_curve(const TrainingLog& log, CurveMetric metric,
                                          std::size_t every = 1);

/// First epoch whose value lies within `fraction` of the last point's value
/// (relative to |last|). Empty curve gives nullopt.
std::optional<std::size_t> epochs_to_within(const std::vector<CurvePoint>& curve,
                                            double fraction = 0.05);

/// epoch,<label 1>,<label 2>,... with blanks where a curve has no point.
void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& curves);

}  // namespace kghait
