#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kghait/eval.hpp"
#include "kghait/hif.hpp"
#include "kghait/settings.hpp"
#include "kghait/squeeze.hpp"
#include "kghait/train.hpp"

namespace kghait {

/// Environment variable naming the directory that relative `data` values
/// are resolved against.
inline constexpr const char* kDataDirEnv = "KGHAIT_DATA_DIR";

/// Resolves the configured split files. `train`/`valid`/`test` win over
/// `data`, a directory holding train.txt, valid.txt and test.txt.
struct DataPaths {
  std::filesystem::path train, valid, test;
};
DataPaths resolve_data_paths(const Settings& s);
Dataset load_configured_dataset(const Settings& s);

DpConfig dp_config(const Settings& s);
SqueezeSettings squeeze_settings(const Settings& s, std::size_t num_relations);
TrainConfig train_config(const Settings& s);
TrainConfig bootstrap_config(const Settings& s);

/// Hash of the settings that influence results (out and jobs excluded).
std::uint64_t run_hash(const Settings& s);

/// Entity rows for the main run: the squeezed HIF rows after the unit-ball
/// constraint every entity table is subject to.
Matrix squeezed_entities(const SqueezeTransform& transform, const HifMatrix& hif);

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::string artifact;
  bool resumed = false;
};

struct ArmResult {
  std::string label;
  RankingReport test;
  std::optional<ValidationMetrics> final_validation;
  TrainingLog log;
  /// First validation epoch within 5% of the final H@10.
  std::optional<std::size_t> hits10_converged_epoch;
};

struct PipelineResult {
  std::vector<StageRecord> stages;
  std::vector<ArmResult> arms;
  double squeeze_loss = 0.0;
  std::uint64_t config_hash = 0;
  std::filesystem::path out_dir;
};

struct PipelineOptions {
  /// Reuse artifacts already present in the run directory.
  bool resume = false;
  std::function<void(const std::string&)> log;
};

/// build-hif -> squeeze -> hif-relation -> train (init=hif) -> evaluate,
/// plus a random-init arm when `baseline` is set. Writes artifacts and
/// manifest.json into `out`. Failures are re-raised tagged with the stage.
PipelineResult run_pipeline(const Settings& settings, const PipelineOptions& options = {});

struct GridCell {
  int norm_p = 1;
  int iterations = 4;
  double lr = 0.0;
  std::filesystem::path dir;
  double valid_mrr = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
};

/// One pipeline per (grid.norm_p x grid.T x grid.lr) cell under out/grid,
/// choosing the cell with the highest validation MRR of the HIF arm.
GridResult run_grid(const Settings& settings, const PipelineOptions& options = {});

}  // namespace kghait
