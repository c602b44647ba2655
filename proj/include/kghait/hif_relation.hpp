#pragma once

#include <cstddef>
#include <filesystem>

#include "kghait/kg.hpp"
#include "kghait/model.hpp"
#include "kghait/train.hpp"

namespace kghait {

struct HifRelationResult {
  /// Entities equal the squeezed input; relations (and TransH normals or
  /// TransR projections) are the bootstrapped values.
  EmbeddingSet embeddings;
  std::size_t epochs = 0;
  double final_loss = 0.0;
  TrainingLog log;
};

/// Bootstrap defaults: 50 epochs, stop when the train loss improves by less
/// than 1e-4 over 5 epochs, no validation.
TrainConfig default_bootstrap_config(const TrainConfig& main);

/// Trains the relation-side parameters against frozen entity rows. The
/// config's freeze flag is forced on and its entity_dim must match the
/// matrix; other shape mismatches raise ConfigError.
HifRelationResult build_hif_relation(const Dataset& dataset, const Matrix& squeezed_entities,
                                     TrainConfig bootstrap_config, const TrainHooks& hooks = {});

void save_hif_relation(const std::filesystem::path& path, const HifRelationResult& result);
HifRelationResult load_hif_relation(const std::filesystem::path& path);

}  // namespace kghait
