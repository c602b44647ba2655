#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "kghait/kg.hpp"
#include "kghait/model.hpp"
#include "kghait/training_log.hpp"

namespace kghait {

enum class InitMode { kRandom, kHif };

std::string_view to_string(InitMode m);
InitMode parse_init(std::string_view name);

struct TrainConfig {
  ModelKind model = ModelKind::kTransE;
  int norm_p = 1;
  double margin = 1.0;
  double lr = 0.002;
  std::size_t batch_size = 2000;
  std::size_t epochs = 200;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 0;
  bool freeze_entities = false;
  InitMode init = InitMode::kRandom;
  std::size_t entity_dim = 50;
  /// TransE/TransH require relation_dim == entity_dim.
  std::size_t relation_dim = 50;
  /// Validation every this many epochs; 0 disables it.
  std::size_t eval_every = 25;
  /// Evaluations without a validation-MRR improvement before stopping; 0 disables it.
  std::size_t patience = 4;
  /// Return the parameters of the best validation epoch instead of the last.
  bool restore_best = true;
  /// Stop once the mean train loss improved by less than plateau_tolerance
  /// over the last plateau_window epochs; window 0 disables it.
  std::size_t plateau_window = 0;
  double plateau_tolerance = 1e-4;

  void validate() const;
};

/// max(0, margin + pos - neg).
double margin_loss(double pos_score, double neg_score, double margin);

/// Replaces the head or the tail (fair coin) with a uniform entity, redrawing
/// the entity while the corruption is a train triple. After 100 attempts the
/// last draw is returned and warnings() is incremented.
class NegativeSampler {
 public:
  static constexpr int kMaxAttempts = 100;

  NegativeSampler(const TripleSet& train, std::size_t num_entities);
  Triple sample(const Triple& positive, std::mt19937_64& rng);
  std::size_t warnings() const noexcept { return warnings_; }

 private:
  const TripleSet& train_;
  std::size_t num_entities_;
  std::size_t warnings_ = 0;
};

struct InitSources {
  /// Squeezed HIF-entity rows (|E| x d_e); required for InitMode::kHif.
  const Matrix* hif_entities = nullptr;
  /// Bootstrap output: relations plus TransH normals / TransR projections.
  const EmbeddingSet* hif_relations = nullptr;
  /// Trained TransE whose entities and relations seed a TransR run.
  const EmbeddingSet* inherit_from = nullptr;
};

/// Random: uniform in [-6/sqrt(d), 6/sqrt(d)] then unit rows; TransH normals
/// are random unit vectors and TransR projections the identity. Hif: the
/// provided matrices are copied. Missing or mis-shaped sources: ConfigError.
EmbeddingSet init_embeddings(const TrainConfig& config, std::size_t num_entities,
                             std::size_t num_relations, const InitSources& sources = {});

struct TrainHooks {
  /// Validation triples and the filter used to rank them.
  std::span<const Triple> validation;
  const TripleSet* filter = nullptr;
  std::function<void(const EpochRecord&, const EmbeddingSet&)> on_epoch;
  std::size_t jobs = 0;
};

struct TrainResult {
  EmbeddingSet embeddings;
  TrainingLog log;
};

/// Mini-batch Adam on the margin loss. Entity rows are kept in the unit ball
/// and TransH normals at unit length after each batch. freeze_entities
/// leaves the entity matrix untouched. Throws ConfigError for an empty train
/// split and NumericError if the loss stops being finite.
TrainResult train(const Dataset& dataset, const TrainConfig& config, EmbeddingSet init,
                  const TrainHooks& hooks = {});

}  // namespace kghait
