#include <cmath>
#include <random>

#include "doctest.h"
#include "kghait/adam.hpp"
#include "kghait/error.hpp"
#include "kghait/eval.hpp"
#include "kghait/train.hpp"
#include "test_graphs.hpp"

using namespace kghait;

namespace {

// Two disjoint "families" sharing two relations, enough structure to learn.
Dataset toy_dataset() {
  std::vector<Triple> all;
  for (EntityId i = 0; i < 10; ++i) {
    all.push_back({i, 0, static_cast<EntityId>((i + 1) % 10)});
    all.push_back({i, 1, static_cast<EntityId>(10 + i % 3)});
  }
  const auto vocab = kghait::testing::numbered_vocab(13, 2);
  std::vector<Triple> train(all.begin(), all.end() - 4);
  std::vector<Triple> valid(all.end() - 4, all.end() - 2);
  std::vector<Triple> test(all.end() - 2, all.end());
  return make_dataset(vocab, train, valid, test);
}

TrainConfig small_config(ModelKind model) {
  TrainConfig c;
  c.model = model;
  c.entity_dim = 8;
  c.relation_dim = model == ModelKind::kTransR ? 6 : 8;
  c.batch_size = 4;
  c.epochs = 20;
  c.lr = 0.01;
  c.seed = 3;
  c.eval_every = 0;
  return c;
}

}  // namespace

TEST_CASE("margin loss") {
  CHECK(margin_loss(0.0, 1.0, 1.0) == 0.0);
  CHECK(margin_loss(0.0, 2.5, 1.0) == 0.0);
  CHECK(margin_loss(0.7, 0.7, 1.0) == 1.0);
  CHECK(margin_loss(1.0, 0.5, 1.0) == 1.5);
}

TEST_CASE("negative sampler") {
  SUBCASE("two entities leave exactly one corruption per side") {
    TripleSet train(2, 1);
    train.insert({0, 0, 1});
    NegativeSampler s(train, 2);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
      const Triple n = s.sample({0, 0, 1}, rng);
      CHECK((n == Triple{1, 0, 1} || n == Triple{0, 0, 0}));
    }
    CHECK(s.warnings() == 0);
  }
  SUBCASE("fair coin over 10^4 draws") {
    const auto ds = toy_dataset();
    TripleSet train(ds.num_entities(), ds.num_relations());
    train.insert(ds.train);
    NegativeSampler s(train, ds.num_entities());
    std::mt19937_64 rng(11);
    std::size_t head = 0;
    std::size_t tail = 0;
    const Triple pos = ds.train.front();
    for (int i = 0; i < 10000; ++i) {
      const Triple n = s.sample(pos, rng);
      CHECK(n.relation == pos.relation);
      CHECK_FALSE(train.contains(n));
      (n.head != pos.head ? head : tail)++;
    }
    const double ratio = static_cast<double>(head) / static_cast<double>(tail);
    CHECK(ratio > 0.95);
    CHECK(ratio < 1.05);
  }
  SUBCASE("seeded sequences repeat") {
    TripleSet train(20, 1);
    NegativeSampler a(train, 20), b(train, 20);
    std::mt19937_64 ra(5), rb(5);
    for (int i = 0; i < 50; ++i) CHECK(a.sample({1, 0, 2}, ra) == b.sample({1, 0, 2}, rb));
  }
  SUBCASE("no valid corruption raises the warning counter") {
    TripleSet train(2, 1);
    for (EntityId h = 0; h < 2; ++h)
      for (EntityId t = 0; t < 2; ++t) train.insert({h, 0, t});
    NegativeSampler s(train, 2);
    std::mt19937_64 rng(2);
    s.sample({0, 0, 1}, rng);
    CHECK(s.warnings() == 1);
  }
  TripleSet one(1, 1);
  CHECK_THROWS_AS(NegativeSampler(one, 1), ConfigError);
}

TEST_CASE("adam matches a hand-computed first step") {
  Matrix p(1, 2, 1.0);
  Matrix g(1, 2);
  g(0, 0) = 0.5;
  g(0, 1) = -2.0;
  AdamSlot slot(p);
  slot.update(p, g, {0.1}, 1);
  // First bias-corrected step moves by lr * sign(g) (up to eps).
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p(0, 1) == doctest::Approx(1.1).epsilon(1e-7));
}

TEST_CASE("init_embeddings") {
  TrainConfig c = small_config(ModelKind::kTransH);
  const auto a = init_embeddings(c, 13, 2);
  const auto b = init_embeddings(c, 13, 2);
  CHECK(a.entities == b.entities);
  CHECK(a.normals == b.normals);
  for (std::size_t r = 0; r < 13; ++r) CHECK(l2_norm(a.entities.row(r)) == doctest::Approx(1.0));
  for (std::size_t r = 0; r < 2; ++r) CHECK(l2_norm(a.normals.row(r)) == doctest::Approx(1.0));

  TrainConfig rc = small_config(ModelKind::kTransR);
  const auto r = init_embeddings(rc, 13, 2);
  CHECK(r.projections(1, 0) == 1.0);
  CHECK(r.projections(1, 1 * 8 + 1) == 1.0);
  CHECK(r.projections(1, 1) == 0.0);

  SUBCASE("hif copies the provided matrices") {
    c.init = InitMode::kHif;
    CHECK_THROWS_AS(init_embeddings(c, 13, 2), ConfigError);
    Matrix hif(13, 8);
    for (std::size_t i = 0; i < hif.size(); ++i) hif.values()[i] = 0.01 * static_cast<double>(i);
    EmbeddingSet rel = a;
    rel.relations.fill(0.25);
    const auto h = init_embeddings(c, 13, 2, {&hif, &rel});
    CHECK(h.entities == hif);
    CHECK(h.relations == rel.relations);
    CHECK(h.normals == rel.normals);
    Matrix wrong(12, 8);
    CHECK_THROWS_AS(init_embeddings(c, 13, 2, {&wrong, &rel}), ConfigError);
  }
  SUBCASE("TransR inherits TransE entities and relations") {
    TrainConfig ec = small_config(ModelKind::kTransE);
    ec.relation_dim = ec.entity_dim = 6;
    rc.entity_dim = rc.relation_dim = 6;
    const auto transe = init_embeddings(ec, 13, 2);
    InitSources src;
    src.inherit_from = &transe;
    const auto inherited = init_embeddings(rc, 13, 2, src);
    CHECK(inherited.entities == transe.entities);
    CHECK(inherited.relations == transe.relations);
    CHECK(inherited.projections(0, 0) == 1.0);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.margin = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.relation_dim = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.model = ModelKind::kTransR;
  CHECK_NOTHROW(c.validate());
  CHECK(parse_init("hif") == InitMode::kHif);
  CHECK_THROWS_AS(parse_init("zeros"), ConfigError);
}

TEST_CASE("single-triple fit drives the loss to zero") {
  const auto vocab = kghait::testing::numbered_vocab(5, 1);
  const auto ds = make_dataset(vocab, {{0, 0, 1}}, {}, {});
  TrainConfig c = small_config(ModelKind::kTransE);
  c.epochs = 500;
  c.batch_size = 1;
  c.lr = 0.01;
  const auto result = train(ds, c, init_embeddings(c, 5, 1));
  CHECK(result.log.epochs.back().loss < 0.01);
}

TEST_CASE("training keeps the norm constraints after every batch") {
  const auto ds = toy_dataset();
  for (auto model : {ModelKind::kTransE, ModelKind::kTransH, ModelKind::kTransR}) {
    TrainConfig c = small_config(model);
    c.lr = 0.05;
    TrainHooks hooks;
    bool checked = false;
    hooks.on_epoch = [&](const EpochRecord&, const EmbeddingSet& e) {
      for (std::size_t r = 0; r < e.num_entities(); ++r) CHECK(l2_norm(e.entities.row(r)) <= 1.0 + 1e-9);
      if (model == ModelKind::kTransH) {
        for (std::size_t r = 0; r < e.num_relations(); ++r) {
          CHECK(std::abs(l2_norm(e.normals.row(r)) - 1.0) <= 1e-9);
        }
      }
      checked = true;
    };
    const auto result = train(ds, c, init_embeddings(c, ds.num_entities(), ds.num_relations()), hooks);
    CHECK(checked);
    CHECK(result.embeddings.all_finite());
  }
}

TEST_CASE("freeze_entities leaves the entity matrix bit-identical") {
  const auto ds = toy_dataset();
  for (auto model : {ModelKind::kTransE, ModelKind::kTransH, ModelKind::kTransR}) {
    TrainConfig c = small_config(model);
    c.freeze_entities = true;
    const auto init = init_embeddings(c, ds.num_entities(), ds.num_relations());
    const auto result = train(ds, c, init);
    CHECK(result.embeddings.entities == init.entities);
    CHECK(result.embeddings.relations != init.relations);
  }
}

TEST_CASE("training is reproducible for a fixed seed") {
  const auto ds = toy_dataset();
  TrainConfig c = small_config(ModelKind::kTransH);
  const auto init = init_embeddings(c, ds.num_entities(), ds.num_relations());
  const auto a = train(ds, c, init);
  const auto b = train(ds, c, init);
  CHECK(a.embeddings.entities == b.embeddings.entities);
  CHECK(a.embeddings.normals == b.embeddings.normals);
  c.seed = 4;
  CHECK(train(ds, c, init).embeddings.entities != a.embeddings.entities);
}

TEST_CASE("validation, early stopping and best-epoch restore") {
  const auto ds = toy_dataset();
  TrainConfig c = small_config(ModelKind::kTransE);
  c.epochs = 60;
  c.eval_every = 5;
  c.patience = 2;
  const auto init = init_embeddings(c, ds.num_entities(), ds.num_relations());
  std::vector<EmbeddingSet> snapshots;
  TrainHooks hooks;
  hooks.validation = ds.valid;
  hooks.on_epoch = [&](const EpochRecord&, const EmbeddingSet& e) { snapshots.push_back(e); };
  const auto result = train(ds, c, init, hooks);
  std::size_t evals = 0;
  for (const auto& r : result.log.epochs) {
    if (r.validation) {
      ++evals;
      CHECK(r.epoch % 5 == 0);
    }
  }
  CHECK(evals >= 1);
  CHECK(snapshots.size() == result.log.epochs.size());
  REQUIRE(result.log.best_epoch >= 1);
  CHECK(result.embeddings.entities == snapshots[result.log.best_epoch - 1].entities);
  if (result.log.early_stopped) CHECK(result.log.epochs.size() < 60);
}

TEST_CASE("training errors") {
  const auto vocab = kghait::testing::numbered_vocab(3, 1);
  const auto empty = make_dataset(vocab, {}, {}, {});
  TrainConfig c = small_config(ModelKind::kTransE);
  CHECK_THROWS_AS(train(empty, c, init_embeddings(c, 3, 1)), ConfigError);

  const auto ds = make_dataset(vocab, {{0, 0, 1}, {1, 0, 2}}, {}, {});
  TrainConfig hot = c;
  hot.lr = 1e308;
  hot.epochs = 5;
  CHECK_THROWS_AS(train(ds, hot, init_embeddings(hot, 3, 1)), NumericError);
}
