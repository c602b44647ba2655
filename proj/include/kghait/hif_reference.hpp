#pragma once

#include <cstddef>
#include <vector>

#include "kghait/hif.hpp"

namespace kghait::reference {

// Exponential-cost evaluators of the HIF recurrence for tiny graphs. They
// scan the raw triple list instead of the adjacency indices and share no
// code with dp_step, so they can serve as test oracles.

inline constexpr std::size_t kMaxExpansions = 1'000'000;

/// w_u^(t) by direct recursion without memoization. Throws OracleScaleError
/// if the recursion tree exceeds kMaxExpansions nodes.
std::vector<double> reference_recursion(const KnowledgeGraph& graph, EntityId u, int t,
                                        const DpConfig& config);

/// One traversal of a path: the triple and whether it was walked from head
/// to tail (an out-going step) or tail to head (an in-coming step).
struct PathStep {
  TripleIndex triple = 0;
  bool forward = true;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// A path leaving the start entity, together with its feature vector: the
/// identity of the far endpoint multiplied element-wise by every triple
/// weight along the path.
struct PathFeature {
  std::vector<PathStep> path;
  /// Entity whose identity terminates the path.
  EntityId endpoint = 0;
  /// True when the path's first step is out-going (or, for length-0 paths,
  /// when the identity seed belongs to the out-going side).
  bool out_side = true;
  std::vector<double> value;
};

/// Every path feature that contributes to w_u^(t) under the sum-product
/// semiring, including the identity seeds emitted at intermediate entities.
/// Throws ConfigError for other semirings and OracleScaleError past
/// kMaxExpansions paths.
std::vector<PathFeature> enumerate_path_features(const KnowledgeGraph& graph, EntityId u, int t,
                                                 const DpConfig& config);

/// Sums the in-side features, sums the out-side features, and adds the two.
std::vector<double> aggregate_path_features(const std::vector<PathFeature>& features,
                                            std::size_t dim);

}  // namespace kghait::reference
