#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "kghait/kg.hpp"
#include "kghait/matrix.hpp"

namespace kghait {

enum class ModelKind : std::uint32_t { kTransE = 0, kTransH = 1, kTransR = 2 };

std::string_view to_string(ModelKind m);
ModelKind parse_model(std::string_view name);

/// Trainable parameters of a translational model.
///
/// TransE uses entities and relations only. TransH adds one hyperplane
/// normal per relation (|R| x d_e). TransR adds one d_r x d_e projection per
/// relation, stored row-major as a row of length d_r * d_e.
struct EmbeddingSet {
  ModelKind model = ModelKind::kTransE;
  /// p of the distance ||f_h + f_r - f_t||_p; 1 or 2.
  int norm_p = 1;
  Matrix entities;
  Matrix relations;
  Matrix normals;
  Matrix projections;

  std::size_t num_entities() const noexcept { return entities.rows(); }
  std::size_t num_relations() const noexcept { return relations.rows(); }
  std::size_t entity_dim() const noexcept { return entities.cols(); }
  std::size_t relation_dim() const noexcept { return relations.cols(); }

  /// Throws ConfigError when the matrices do not fit the model's shapes.
  void validate() const;
  bool all_finite() const;
};

/// Same-shaped accumulator for parameter gradients.
struct EmbeddingGradient {
  Matrix entities;
  Matrix relations;
  Matrix normals;
  Matrix projections;

  static EmbeddingGradient zeros_like(const EmbeddingSet& emb);
  void clear();
};

/// f_h / f_t: maps an entity vector into relation space for relation r.
/// `out` must have relation_dim() entries.
void project_entity(const EmbeddingSet& emb, RelationId r, std::span<const double> entity,
                    std::span<double> out);

/// ||(fh + rel) - ft||_p with the model's p.
double translation_distance(std::span<const double> fh, std::span<const double> rel,
                            std::span<const double> ft, int norm_p);

/// Dissimilarity of a triple; lower is more plausible.
double score(const EmbeddingSet& emb, EntityId h, RelationId r, EntityId t);
inline double score(const EmbeddingSet& emb, const Triple& tr) {
  return score(emb, tr.head, tr.relation, tr.tail);
}

/// Adds coeff * d score(h, r, t) / d theta into `grad`. At points where the
/// norm is not differentiable (zero residual components) the zero
/// subgradient is used.
void accumulate_score_gradient(const EmbeddingSet& emb, const Triple& tr, double coeff,
                               EmbeddingGradient& grad);

/// Scales every entity row with L2 norm above 1 back onto the unit sphere.
void project_rows_to_unit_ball(Matrix& m);
/// Rescales every non-zero row to unit L2 norm.
void normalize_rows(Matrix& m);

struct CheckpointInfo {
  std::uint64_t epoch = 0;
  std::uint64_t config_hash = 0;
  /// Set for HIF-relation bootstrap artifacts.
  bool bootstrap = false;
};

void save_checkpoint(const std::filesystem::path& path, const EmbeddingSet& emb,
                     const CheckpointInfo& info);
EmbeddingSet load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace kghait
