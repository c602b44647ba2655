#include "kghait/hif_relation.hpp"

#include "kghait/error.hpp"

namespace kghait {

TrainConfig default_bootstrap_config(const TrainConfig& main) {
  TrainConfig c = main;
  c.epochs = 50;
  c.plateau_window = 5;
  c.plateau_tolerance = 1e-4;
  c.eval_every = 0;
  c.patience = 0;
  c.freeze_entities = true;
  c.init = InitMode::kRandom;
  return c;
}

HifRelationResult build_hif_relation(const Dataset& dataset, const Matrix& squeezed_entities,
                                     TrainConfig config, const TrainHooks& hooks) {
  config.freeze_entities = true;
  config.init = InitMode::kRandom;
  if (squeezed_entities.rows() != dataset.num_entities() ||
      squeezed_entities.cols() != config.entity_dim) {
    throw ConfigError("squeezed HIF-entity matrix is " + std::to_string(squeezed_entities.rows()) +
                      "x" + std::to_string(squeezed_entities.cols()) + ", expected " +
                      std::to_string(dataset.num_entities()) + "x" +
                      std::to_string(config.entity_dim));
  }
  EmbeddingSet init = init_embeddings(config, dataset.num_entities(), dataset.num_relations());
  init.entities = squeezed_entities;
  auto trained = train(dataset, config, std::move(init), hooks);

  HifRelationResult out;
  out.embeddings = std::move(trained.embeddings);
  out.epochs = trained.log.epochs.size();
  out.final_loss = trained.log.epochs.empty() ? 0.0 : trained.log.epochs.back().loss;
  out.log = std::move(trained.log);
  return out;
}

void save_hif_relation(const std::filesystem::path& path, const HifRelationResult& result) {
  CheckpointInfo info;
  info.epoch = result.epochs;
  info.bootstrap = true;
  save_checkpoint(path, result.embeddings, info);
}

HifRelationResult load_hif_relation(const std::filesystem::path& path) {
  CheckpointInfo info;
  HifRelationResult out;
  out.embeddings = load_checkpoint(path, &info);
  if (!info.bootstrap) throw DataError(path.string() + " is not a HIF-relation bootstrap artifact");
  out.epochs = info.epoch;
  return out;
}

}  // namespace kghait
