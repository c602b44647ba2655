#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "kghait/kg.hpp"
#include "kghait/matrix.hpp"

namespace kghait {

/// Operator pair bound into the HIF dynamic program.
///
///  - kConcreteMaxDecay: element-wise max within each side, out-side minus
///    in-side between them.
///  - kSumProduct: addition everywhere, element-wise product with the triple
///    weight.
///  - kMaxProduct: element-wise max everywhere, element-wise product with the
///    triple weight.
enum class Semiring : std::uint32_t {
  kConcreteMaxDecay = 0,
  kSumProduct = 1,
  kMaxProduct = 2,
};

std::string_view to_string(Semiring s);
Semiring parse_semiring(std::string_view name);

struct DpConfig {
  int iterations = 4;
  double alpha = 0.5;
  Semiring semiring = Semiring::kConcreteMaxDecay;
  /// Seed both side accumulators with e(u) on every iteration. When false,
  /// e(u) only stands in for an empty side.
  bool include_identity_each_step = true;
  /// Optional per-triple weight vectors v(p), one row per training triple
  /// (|triples| x |R|). Unset means the constant alpha in every dimension.
  std::optional<Matrix> triple_weights;

  /// Throws ConfigError unless iterations >= 1 and alpha in (0, 1].
  void validate() const;
  /// Weight of triple `p` in dimension `k`.
  double weight(TripleIndex p, std::size_t k) const {
    return triple_weights ? (*triple_weights)(p, k) : alpha;
  }
};

/// |E| x |R| matrix of DP outputs, one row per entity.
struct HifMatrix {
  Matrix data;
  int iterations_used = 0;
  double alpha = 0.0;
  Semiring semiring = Semiring::kConcreteMaxDecay;
  bool include_identity_each_step = true;

  std::size_t num_entities() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }
};

/// Signed relation-count vector: out-going count minus in-coming count per
/// relation.
std::vector<double> entity_identity(const KnowledgeGraph& graph, EntityId u);

/// entity_identity for every entity, as an |E| x |R| matrix.
Matrix entity_identities(const KnowledgeGraph& graph);

/// One DP transition from `prev` (iteration t-1) to iteration t. Rows are
/// computed independently and may run in parallel.
HifMatrix dp_step(const KnowledgeGraph& graph, const HifMatrix& prev, const DpConfig& config,
                  std::size_t jobs = 0);

/// Identity rows at t = 1 followed by dp_step for t = 2..T.
HifMatrix build_hif_entity(const KnowledgeGraph& graph, const DpConfig& config,
                           std::size_t jobs = 0);

/// Cosine of two HIF rows. Throws NumericError if either row is zero.
double hif_cosine(const HifMatrix& m, EntityId u, EntityId v);

void save_hif(const std::filesystem::path& path, const HifMatrix& m);
HifMatrix load_hif(const std::filesystem::path& path);
/// One line per entity: name followed by the row values.
void export_hif_csv(const std::filesystem::path& path, const HifMatrix& m,
                    const Vocabulary& entities);

}  // namespace kghait
