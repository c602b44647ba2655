#include <cmath>
#include <random>

#include "doctest.h"
#include "kghait/error.hpp"
#include "kghait/squeeze.hpp"
#include "test_graphs.hpp"

using namespace kghait;

namespace {

Matrix identity_like(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
  return m;
}

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mcs_loss on structured matrices") {
  CHECK(mcs_loss(identity_like(5, 3)) == 0.0);
  CHECK(mcs_loss(identity_like(4, 4)) == 0.0);

  Matrix twins(3, 2);
  twins(0, 0) = twins(0, 1) = 1.0;
  twins(1, 0) = twins(1, 1) = 2.0;
  CHECK(mcs_loss(twins) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix opposite = twins;
  for (std::size_t r = 0; r < 3; ++r) opposite(r, 1) = -opposite(r, 1);
  CHECK(mcs_loss(opposite) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix zero_col = identity_like(3, 3);
  zero_col(2, 2) = 0.0;
  CHECK_THROWS_AS(mcs_loss(zero_col), NumericError);
  CHECK_THROWS_AS(mcs_loss(Matrix(3, 1, 1.0)), ConfigError);
}

TEST_CASE("random Gaussian 100x237 start has coherence well above the target") {
  const Matrix m = random_transform(100, 237, 1);
  const double loss = mcs_loss(m);
  CHECK(loss > 0.2);
  CHECK(loss < 1.0);
}

TEST_CASE("welch bound") {
  CHECK(welch_bound(237, 100) == doctest::Approx(std::sqrt(137.0 / (100.0 * 236.0))));
  CHECK(welch_bound(237, 100) == doctest::Approx(0.0762).epsilon(1e-3));
  CHECK(welch_bound(10, 10) == 0.0);
}

TEST_CASE("surrogate gradient matches central finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m(5, 7);
    for (double& v : m.values()) v = normal(rng);
    for (double beta : {1.0, 10.0, 50.0}) {
      const auto eval = smoothed_coherence(m, beta);
      std::vector<double> numeric(m.size());
      const double h = 1e-6;
      for (std::size_t i = 0; i < m.size(); ++i) {
        Matrix plus = m;
        Matrix minus = m;
        plus.values()[i] += h;
        minus.values()[i] -= h;
        numeric[i] = (smoothed_coherence(plus, beta).value - smoothed_coherence(minus, beta).value) /
                     (2 * h);
      }
      std::vector<double> diff(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) diff[i] = eval.gradient.values()[i] - numeric[i];
      const double scale = std::max(norm_of(numeric), norm_of(eval.gradient.values()));
      CHECK(norm_of(diff) / scale < 1e-5);
    }
  }
}

TEST_CASE("surrogate approaches the squared true loss as beta grows") {
  const Matrix m = random_transform(6, 9, 4);
  const double loss = mcs_loss(m);
  const double s = smoothed_coherence(m, 1e5).value;
  CHECK(s >= loss * loss - 1e-12);
  CHECK(s == doctest::Approx(loss * loss).epsilon(1e-3));
}

TEST_CASE("optimize_transform reaches 0.15 on 100 x 237") {
  SqueezeSettings s;
  s.embedding_dim = 100;
  s.num_relations = 237;
  s.seed = 7;
  const auto t = optimize_transform(s);
  CHECK(t.reached_target);
  CHECK(t.final_mcs_loss <= 0.15);
  CHECK(t.final_mcs_loss >= welch_bound(237, 100));
  CHECK(t.final_mcs_loss <= t.initial_mcs_loss);
  CHECK(t.iterations <= s.max_iters);
  CHECK(std::abs(t.final_mcs_loss - mcs_loss(t.matrix)) <= 1e-9);
}

TEST_CASE("optimize_transform is exact when d_e >= |R|") {
  SqueezeSettings s;
  s.embedding_dim = 12;
  s.num_relations = 9;
  const auto t = optimize_transform(s);
  CHECK(t.final_mcs_loss <= 1e-6);
  CHECK(t.matrix.rows() == 12);
  CHECK(t.matrix.cols() == 9);
}

TEST_CASE("optimize_transform is deterministic and never worsens the loss") {
  SqueezeSettings s;
  s.embedding_dim = 8;
  s.num_relations = 20;
  s.seed = 99;
  s.max_iters = 300;
  const auto a = optimize_transform(s);
  const auto b = optimize_transform(s);
  CHECK(a.matrix == b.matrix);
  CHECK(a.final_mcs_loss <= a.initial_mcs_loss);

  s.seed = 100;
  CHECK(optimize_transform(s).matrix != a.matrix);
}

TEST_CASE("optimize_transform returns best-found with a flag when it runs out of iterations") {
  SqueezeSettings s;
  s.embedding_dim = 3;
  s.num_relations = 40;  // Welch floor ~0.8, target unattainable
  s.max_iters = 50;
  const auto t = optimize_transform(s);
  CHECK_FALSE(t.reached_target);
  CHECK(t.final_mcs_loss <= t.initial_mcs_loss);
  CHECK(t.final_mcs_loss > 0.15);
}

TEST_CASE("optimize_transform validates its settings") {
  SqueezeSettings s;
  s.embedding_dim = 1;
  s.num_relations = 5;
  CHECK_THROWS_AS(optimize_transform(s), ConfigError);
  s.embedding_dim = 5;
  s.num_relations = 1;
  CHECK_THROWS_AS(optimize_transform(s), ConfigError);
}

TEST_CASE("apply_squeeze is a row-wise matrix product") {
  HifMatrix hif;
  hif.data = Matrix(3, 4);
  for (std::size_t i = 0; i < hif.data.size(); ++i) hif.data.values()[i] = static_cast<double>(i) - 5.0;

  SUBCASE("identity transform") {
    CHECK(apply_squeeze(identity_like(4, 4), hif) == hif.data);
  }
  SUBCASE("unit row picks out a column") {
    const Matrix m = random_transform(6, 4, 2);
    HifMatrix unit;
    unit.data = Matrix(1, 4);
    unit.data(0, 2) = 1.0;
    const Matrix out = apply_squeeze(m, unit);
    for (std::size_t r = 0; r < 6; ++r) CHECK(out(0, r) == m(r, 2));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(apply_squeeze(Matrix(5, 3), hif), ConfigError);
  }
}

TEST_CASE("squeeze artifact round trip") {
  kghait::testing::TempDir dir("squeeze_io");
  SqueezeSettings s;
  s.embedding_dim = 4;
  s.num_relations = 6;
  s.max_iters = 100;
  s.seed = 5;
  const auto t = optimize_transform(s);
  save_squeeze(dir / "m.bin", t);
  const auto back = load_squeeze(dir / "m.bin");
  CHECK(back.matrix == t.matrix);
  CHECK(back.final_mcs_loss == t.final_mcs_loss);
  CHECK(back.initial_mcs_loss == t.initial_mcs_loss);
  CHECK(back.seed == 5);
  CHECK(back.iterations == t.iterations);
  CHECK(back.reached_target == t.reached_target);
}
