#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace kghait {

struct ValidationMetrics {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<ValidationMetrics> validation;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  /// Number of corruptions that stayed inside the train set after the retry cap.
  std::size_t sampler_warnings = 0;
  bool early_stopped = false;
  /// Epoch whose parameters were returned (best validation MRR when tracked).
  std::size_t best_epoch = 0;
};

/// CSV columns: epoch,loss,val_mr,val_mrr,val_h1,val_h3,val_h10; the
/// validation fields are empty on epochs without an evaluation.
void write_training_log(const std::filesystem::path& path, const TrainingLog& log);
TrainingLog read_training_log(const std::filesystem::path& path);

}  // namespace kghait
