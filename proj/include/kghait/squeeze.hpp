#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "kghait/hif.hpp"
#include "kghait/matrix.hpp"

namespace kghait {

struct SqueezeSettings {
  std::size_t embedding_dim = 100;
  std::size_t num_relations = 0;
  std::uint64_t seed = 0;
  double lr = 2.0;
  int max_iters = 5000;
  double target_loss = 0.15;
  int plateau_window = 200;
  double plateau_tolerance = 1e-6;
  /// Log-sum-exp temperature, annealed geometrically from start to end over
  /// max_iters.
  double beta_start = 10.0;
  double beta_end = 400.0;

  void validate() const;
};

/// d_e x |R| projection whose columns are mutually near-orthogonal.
struct SqueezeTransform {
  Matrix matrix;
  double initial_mcs_loss = 0.0;
  double final_mcs_loss = 0.0;
  int iterations = 0;
  /// False when max_iters ran out before target_loss (best-found returned).
  bool reached_target = false;
  std::uint64_t seed = 0;
};

/// Largest absolute cosine between two distinct columns.
/// Throws ConfigError for < 2 columns and NumericError for a zero column.
double mcs_loss(const Matrix& m);

/// Welch lower bound on the coherence of n unit vectors in R^d (0 if n <= d).
double welch_bound(std::size_t n, std::size_t d);

struct SurrogateEval {
  double value = 0.0;
  Matrix gradient;
};

/// (1/beta) * log sum_{i<j} exp(beta * cos^2(c_i, c_j)) and its gradient
/// with respect to the matrix entries.
SurrogateEval smoothed_coherence(const Matrix& m, double beta);

/// Seeded standard-normal start, then gradient descent on the smoothed
/// surrogate with columns renormalized after every step. Stops on the true
/// loss reaching target_loss, on max_iters, or on a plateau of the best
/// true loss. d_e >= |R| is solved exactly by orthonormalization.
SqueezeTransform optimize_transform(const SqueezeSettings& settings);

/// Seeded standard-normal d_e x |R| matrix (the optimizer's starting point).
Matrix random_transform(std::size_t embedding_dim, std::size_t num_relations,
                        std::uint64_t seed);

/// Row-wise M * w_u for every HIF row: an |E| x d_e matrix.
Matrix apply_squeeze(const Matrix& transform, const HifMatrix& hif);

/// Median over sampled pairs of non-zero HIF rows of
/// |cos(M v1, M v2) - cos(v1, v2)|.
double median_cosine_distortion(const Matrix& transform, const HifMatrix& hif,
                                std::size_t num_pairs, std::uint64_t seed);

void save_squeeze(const std::filesystem::path& path, const SqueezeTransform& t);
SqueezeTransform load_squeeze(const std::filesystem::path& path);

}  // namespace kghait
