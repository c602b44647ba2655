#include <cmath>
#include <random>

#include "doctest.h"
#include "kghait/error.hpp"
#include "kghait/hif_relation.hpp"
#include "test_graphs.hpp"

using namespace kghait;

namespace {

Matrix random_rows(std::size_t rows, std::size_t cols, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// The hinge stays active everywhere when the margin exceeds every score
// difference, so the expected loss is ||r - (t - h)|| minus an average of
// negative distances whose gradient is shorter than 1. Its minimizer is
// then exactly t - h.
TrainConfig recovery_config(std::size_t dim) {
  TrainConfig c;
  c.model = ModelKind::kTransE;
  c.norm_p = 2;
  c.entity_dim = c.relation_dim = dim;
  c.margin = 20.0;
  c.batch_size = 1;
  c.negatives_per_positive = 8;
  c.lr = 0.002;
  c.epochs = 3000;
  c.eval_every = 0;
  c.plateau_window = 0;
  c.seed = 1;
  return c;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("bootstrap defaults") {
  TrainConfig main;
  main.lr = 0.0005;
  const auto b = default_bootstrap_config(main);
  CHECK(b.epochs == 50);
  CHECK(b.plateau_window == 5);
  CHECK(b.plateau_tolerance == 1e-4);
  CHECK(b.freeze_entities);
  CHECK(b.lr == 0.0005);
}

TEST_CASE("bootstrap never touches the entity matrix") {
  const auto g = kghait::testing::random_graph(8, 12, 3, 40);
  const auto ds = make_dataset(g.vocab(), g.triples(), {}, {});
  for (auto model : {ModelKind::kTransE, ModelKind::kTransH, ModelKind::kTransR}) {
    TrainConfig c;
    c.model = model;
    c.entity_dim = 6;
    c.relation_dim = model == ModelKind::kTransR ? 4 : 6;
    c.batch_size = 8;
    c.freeze_entities = false;
    c = default_bootstrap_config(c);
    // Rows outside the unit ball would be rescaled if the constraint ran.
    const Matrix hif = random_rows(ds.num_entities(), 6, 3.0, 4);
    const auto out = build_hif_relation(ds, hif, c);
    CHECK(out.embeddings.entities == hif);
    CHECK(out.epochs >= 1);
    CHECK(out.epochs <= 50);
  }
}

TEST_CASE("single-triple bootstrap recovers r = t - h") {
  const std::size_t dim = 4;
  const auto vocab = kghait::testing::numbered_vocab(8, 1);
  const auto ds = make_dataset(vocab, {{0, 0, 1}}, {}, {});
  const Matrix hif = random_rows(8, dim, 1.0, 17);
  const auto out = build_hif_relation(ds, hif, recovery_config(dim));
  std::vector<double> target(dim);
  for (std::size_t k = 0; k < dim; ++k) target[k] = hif(1, k) - hif(0, k);
  CHECK(distance(out.embeddings.relations.row(0), target) <= 1e-2);
}

TEST_CASE("bootstrap recovers planted translations") {
  const std::size_t dim = 4;
  const std::size_t pairs = 5;
  const Matrix translations = random_rows(2, dim, 0.5, 23);
  const Matrix heads = random_rows(2 * pairs, dim, 1.0, 29);
  Matrix hif(4 * pairs, dim);
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < 2 * pairs; ++i) {
    const auto r = static_cast<RelationId>(i / pairs);
    const auto h = static_cast<EntityId>(2 * i);
    for (std::size_t k = 0; k < dim; ++k) {
      hif(h, k) = heads(i, k);
      hif(h + 1, k) = heads(i, k) + translations(r, k);
    }
    triples.push_back({h, r, h + 1});
  }
  const auto ds = make_dataset(kghait::testing::numbered_vocab(4 * pairs, 2), triples, {}, {});
  TrainConfig c = recovery_config(dim);
  c.batch_size = triples.size();
  const auto out = build_hif_relation(ds, hif, c);
  for (RelationId r = 0; r < 2; ++r) {
    CHECK(distance(out.embeddings.relations.row(r), translations.row(r)) <= 1e-2);
  }
}

TEST_CASE("bootstrap loss trends down") {
  // 4 relations x 50 pairs, each tail = head + planted translation.
  const std::size_t pairs = 50, nr = 4, dim = 8;
  const Matrix translations = random_rows(nr, dim, 0.5, 41);
  const Matrix heads = random_rows(pairs * nr, dim, 0.5, 43);
  Matrix hif(2 * pairs * nr, dim);
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < pairs * nr; ++i) {
    const auto r = static_cast<RelationId>(i / pairs);
    for (std::size_t k = 0; k < dim; ++k) {
      hif(2 * i, k) = heads(i, k);
      hif(2 * i + 1, k) = heads(i, k) + translations(r, k);
    }
    triples.push_back({static_cast<EntityId>(2 * i), r, static_cast<EntityId>(2 * i + 1)});
  }
  const auto ds = make_dataset(kghait::testing::numbered_vocab(hif.rows(), nr), triples, {}, {});
  TrainConfig c;
  c.entity_dim = c.relation_dim = dim;
  c.batch_size = 32;
  c.lr = 0.01;
  c.seed = 1;
  c = default_bootstrap_config(c);
  c.plateau_window = 0;
  const auto out = build_hif_relation(ds, hif, c);
  REQUIRE(out.log.epochs.size() == 50);
  std::vector<double> windows;
  for (std::size_t w = 0; w + 10 <= 50; w += 10) {
    double s = 0.0;
    for (std::size_t e = w; e < w + 10; ++e) s += out.log.epochs[e].loss;
    windows.push_back(s / 10.0);
  }
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1] + 1e-3);
  CHECK(windows.back() < 0.5 * windows.front());
}

TEST_CASE("bootstrap errors and persistence") {
  const auto ds = make_dataset(kghait::testing::numbered_vocab(3, 1), {{0, 0, 1}}, {}, {});
  TrainConfig c = default_bootstrap_config(TrainConfig{});
  c.entity_dim = c.relation_dim = 4;
  CHECK_THROWS_AS(build_hif_relation(ds, Matrix(3, 5), c), ConfigError);
  CHECK_THROWS_AS(build_hif_relation(ds, Matrix(2, 4), c), ConfigError);

  kghait::testing::TempDir dir("bootstrap");
  const auto out = build_hif_relation(ds, random_rows(3, 4, 1.0, 1), c);
  save_hif_relation(dir / "rel.bin", out);
  const auto back = load_hif_relation(dir / "rel.bin");
  CHECK(back.embeddings.relations == out.embeddings.relations);
  CHECK(back.epochs == out.epochs);

  save_checkpoint(dir / "plain.bin", out.embeddings, {});
  CHECK_THROWS_AS(load_hif_relation(dir / "plain.bin"), DataError);
}
