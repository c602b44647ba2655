#include "kghait/squeeze.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "kghait/binary_io.hpp"
#include "kghait/error.hpp"

namespace kghait {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  return Eigen::Map<const RowMajor>(m.data(), static_cast<Eigen::Index>(m.rows()),
                                    static_cast<Eigen::Index>(m.cols()));
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  Eigen::Map<RowMajor>(m.data(), e.rows(), e.cols()) = e;
  return m;
}

Eigen::RowVectorXd column_norms(const Eigen::MatrixXd& c) {
  Eigen::RowVectorXd n = c.colwise().norm();
  for (Eigen::Index j = 0; j < n.size(); ++j) {
    if (n(j) == 0.0) {
      throw NumericError("degenerate transform: column " + std::to_string(j) + " is zero");
    }
  }
  return n;
}

// Off-diagonal max |G_ij| of the cosine Gram matrix.
double max_offdiag(const Eigen::MatrixXd& gram) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) worst = std::max(worst, std::abs(gram(i, j)));
  }
  return std::min(worst, 1.0);
}

// Value and column-gradient of the surrogate for unit columns `u`. The
// returned gradient is with respect to u (before the normalization chain).
double surrogate_on_unit(const Eigen::MatrixXd& u, double beta, Eigen::MatrixXd& grad_u,
                         double& true_loss) {
  const Eigen::MatrixXd gram = u.transpose() * u;
  const Eigen::Index n = gram.cols();
  double mx = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      mx = std::max(mx, beta * gram(i, j) * gram(i, j));
      worst = std::max(worst, std::abs(gram(i, j)));
    }
  }
  true_loss = std::min(worst, 1.0);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
  double z = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double e = std::exp(beta * gram(i, j) * gram(i, j) - mx);
      weights(i, j) = e;
      z += e;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double w = weights(i, j) / z * 2.0 * gram(i, j);
      weights(i, j) = w;
      weights(j, i) = w;
    }
  }
  grad_u = u * weights;
  return (mx + std::log(z)) / beta;
}

// Chains d/du through u = c / ||c|| column-wise.
Eigen::MatrixXd chain_normalization(const Eigen::MatrixXd& u, const Eigen::MatrixXd& grad_u,
                                    const Eigen::RowVectorXd& norms) {
  Eigen::MatrixXd g = grad_u;
  const Eigen::RowVectorXd radial = (u.array() * grad_u.array()).colwise().sum();
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    g.col(j) = (grad_u.col(j) - radial(j) * u.col(j)) / norms(j);
  }
  return g;
}

}  // namespace

void SqueezeSettings::validate() const {
  if (embedding_dim < 2 || num_relations < 2) {
    throw ConfigError("squeeze needs d_e >= 2 and |R| >= 2");
  }
  if (!(lr > 0.0) || max_iters < 1 || plateau_window < 1 || !(beta_start > 0.0) ||
      !(beta_end > 0.0)) {
    throw ConfigError("squeeze settings: lr, max_iters, plateau window and temperatures must be positive");
  }
}

double mcs_loss(const Matrix& m) {
  if (m.cols() < 2) throw ConfigError("mcs_loss needs at least two columns");
  const Eigen::MatrixXd c = to_eigen(m);
  const Eigen::RowVectorXd norms = column_norms(c);
  const Eigen::MatrixXd u = c.array().rowwise() / norms.array();
  return max_offdiag(u.transpose() * u);
}

double welch_bound(std::size_t n, std::size_t d) {
  if (n <= d || n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  return std::sqrt((nn - dd) / (dd * (nn - 1.0)));
}

SurrogateEval smoothed_coherence(const Matrix& m, double beta) {
  if (m.cols() < 2) throw ConfigError("surrogate needs at least two columns");
  const Eigen::MatrixXd c = to_eigen(m);
  const Eigen::RowVectorXd norms = column_norms(c);
  const Eigen::MatrixXd u = c.array().rowwise() / norms.array();
  Eigen::MatrixXd grad_u;
  double true_loss = 0.0;
  SurrogateEval out;
  out.value = surrogate_on_unit(u, beta, grad_u, true_loss);
  out.gradient = from_eigen(chain_normalization(u, grad_u, norms));
  return out;
}

Matrix random_transform(std::size_t embedding_dim, std::size_t num_relations,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(embedding_dim, num_relations);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

SqueezeTransform optimize_transform(const SqueezeSettings& s) {
  s.validate();
  SqueezeTransform out;
  out.seed = s.seed;
  const Matrix start = random_transform(s.embedding_dim, s.num_relations, s.seed);
  out.initial_mcs_loss = mcs_loss(start);

  if (s.embedding_dim >= s.num_relations) {
    // An orthonormal set of |R| columns exists; take it from a QR of the start.
    const Eigen::MatrixXd c = to_eigen(start);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(c.rows(), c.cols());
    out.matrix = from_eigen(q);
    out.final_mcs_loss = mcs_loss(out.matrix);
    out.reached_target = out.final_mcs_loss <= s.target_loss;
    return out;
  }

  Eigen::MatrixXd c = to_eigen(start);
  c = c.array().rowwise() / column_norms(c).array();
  Eigen::MatrixXd best = c;
  double best_loss = out.initial_mcs_loss;
  double window_start_loss = best_loss;
  int window_start_iter = 0;

  int it = 0;
  for (; it < s.max_iters; ++it) {
    const double frac = s.max_iters > 1 ? static_cast<double>(it) / (s.max_iters - 1) : 0.0;
    const double beta = s.beta_start * std::pow(s.beta_end / s.beta_start, frac);
    Eigen::MatrixXd grad_u;
    double current = 0.0;
    surrogate_on_unit(c, beta, grad_u, current);
    if (current < best_loss) {
      best_loss = current;
      best = c;
    }
    if (best_loss <= s.target_loss) break;
    if (it - window_start_iter >= s.plateau_window) {
      if (window_start_loss - best_loss < s.plateau_tolerance) break;
      window_start_loss = best_loss;
      window_start_iter = it;
    }
    // Columns are unit length here, so the chain rule reduces to the
    // tangential projection.
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(c.cols());
    c -= s.lr * chain_normalization(c, grad_u, ones);
    c = c.array().rowwise() / column_norms(c).array();
  }

  out.iterations = it;
  out.matrix = from_eigen(best);
  out.final_mcs_loss = mcs_loss(out.matrix);
  out.reached_target = out.final_mcs_loss <= s.target_loss;
  return out;
}

Matrix apply_squeeze(const Matrix& transform, const HifMatrix& hif) {
  if (transform.cols() != hif.dim()) {
    throw ConfigError("squeeze shape mismatch: transform has " + std::to_string(transform.cols()) +
                      " columns, HIF rows have " + std::to_string(hif.dim()) + " entries");
  }
  const Eigen::MatrixXd m = to_eigen(transform);
  const Eigen::MatrixXd w = to_eigen(hif.data);
  return from_eigen(w * m.transpose());
}

double median_cosine_distortion(const Matrix& transform, const HifMatrix& hif,
                                std::size_t num_pairs, std::uint64_t seed) {
  const Matrix projected = apply_squeeze(transform, hif);
  std::vector<std::size_t> nonzero;
  for (std::size_t u = 0; u < hif.num_entities(); ++u) {
    if (l2_norm(hif.data.row(u)) > 0.0 && l2_norm(projected.row(u)) > 0.0) nonzero.push_back(u);
  }
  if (nonzero.size() < 2) throw NumericError("need at least two non-zero HIF rows");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, nonzero.size() - 1);
  std::vector<double> gaps;
  gaps.reserve(num_pairs);
  while (gaps.size() < num_pairs) {
    const auto a = nonzero[pick(rng)];
    const auto b = nonzero[pick(rng)];
    if (a == b) continue;
    gaps.push_back(std::abs(cosine(projected.row(a), projected.row(b)) -
                            cosine(hif.data.row(a), hif.data.row(b))));
  }
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  if (gaps.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(gaps.begin(), mid);
  return 0.5 * (lower + upper);
}

void save_squeeze(const std::filesystem::path& path, const SqueezeTransform& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write squeeze artifact: " + path.string());
  io::write_header(out, io::kSqueezeMagic);
  io::write_u64(out, t.matrix.rows());
  io::write_u64(out, t.matrix.cols());
  io::write_u64(out, t.seed);
  io::write_f64(out, t.final_mcs_loss);
  io::write_f64(out, t.initial_mcs_loss);
  io::write_u32(out, static_cast<std::uint32_t>(t.iterations));
  io::write_u32(out, t.reached_target ? 1u : 0u);
  io::write_payload(out, t.matrix);
}

SqueezeTransform load_squeeze(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open squeeze artifact: " + path.string());
  io::read_header(in, io::kSqueezeMagic, "squeeze transform");
  SqueezeTransform t;
  const auto rows = io::read_u64(in);
  const auto cols = io::read_u64(in);
  t.seed = io::read_u64(in);
  t.final_mcs_loss = io::read_f64(in);
  t.initial_mcs_loss = io::read_f64(in);
  t.iterations = static_cast<int>(io::read_u32(in));
  t.reached_target = io::read_u32(in) != 0;
  t.matrix = io::read_payload(in, rows, cols);
  return t;
}

}  // namespace kghait
