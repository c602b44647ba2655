#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "kghait/curves.hpp"
#include "kghait/error.hpp"
#include "kghait/eval.hpp"
#include "kghait/similarity.hpp"
#include "test_graphs.hpp"

using namespace kghait;

namespace {

// Scores every candidate, sorts, and reads off the position of the true
// entity with ties ordered ahead of it.
std::size_t oracle_rank(const EmbeddingSet& emb, const Triple& tr, Side side,
                        const TripleSet& filter) {
  struct Entry {
    double score;
    bool truth;
  };
  std::vector<Entry> entries;
  for (EntityId c = 0; c < emb.num_entities(); ++c) {
    Triple cand = tr;
    (side == Side::kHead ? cand.head : cand.tail) = c;
    const bool truth = cand == tr;
    if (!truth && filter.contains(cand)) continue;
    entries.push_back({score(emb, cand), truth});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score < b.score;
    return !a.truth && b.truth;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].truth) return i + 1;
  }
  return 0;
}

struct Case {
  EmbeddingSet emb;
  std::vector<Triple> known;
  std::vector<Triple> test;
};

Case random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  Case c;
  const std::size_t ne = pick(2, 15);
  const std::size_t nr = pick(1, 4);
  const std::size_t d = pick(1, 5);
  c.emb.model = static_cast<ModelKind>(seed % 3);
  c.emb.norm_p = static_cast<int>(1 + (seed / 3) % 2);
  // Coarse values so ties actually occur.
  std::uniform_int_distribution<int> coarse(-2, 2);
  auto fill = [&](Matrix& m) {
    for (double& v : m.values()) v = 0.5 * coarse(rng);
  };
  c.emb.entities = Matrix(ne, d);
  c.emb.relations = Matrix(nr, d);
  fill(c.emb.entities);
  fill(c.emb.relations);
  if (c.emb.model == ModelKind::kTransH) {
    c.emb.normals = Matrix(nr, d);
    fill(c.emb.normals);
  }
  if (c.emb.model == ModelKind::kTransR) {
    c.emb.projections = Matrix(nr, d * d);
    fill(c.emb.projections);
  }
  for (std::size_t i = pick(0, 30); i > 0; --i) {
    c.known.push_back({static_cast<EntityId>(pick(0, ne - 1)),
                       static_cast<RelationId>(pick(0, nr - 1)),
                       static_cast<EntityId>(pick(0, ne - 1))});
  }
  for (std::size_t i = pick(1, 6); i > 0; --i) {
    c.test.push_back({static_cast<EntityId>(pick(0, ne - 1)),
                      static_cast<RelationId>(pick(0, nr - 1)),
                      static_cast<EntityId>(pick(0, ne - 1))});
  }
  return c;
}

TripleSet filter_of(const Case& c) {
  TripleSet f(c.emb.num_entities(), c.emb.num_relations());
  f.insert(c.known);
  f.insert(c.test);
  return f;
}

void check_identities(const RankingReport& r) {
  CHECK(r.hits.at(1) <= r.hits.at(3));
  CHECK(r.hits.at(3) <= r.hits.at(10));
  CHECK(r.hits.at(10) <= 1.0);
  CHECK(r.mrr >= r.hits.at(1));
  CHECK(r.mr >= 1.0);
}

}  // namespace

TEST_CASE("filtered_rank matches the sorting oracle on 200 random cases") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CAPTURE(seed);
    const Case c = random_case(seed);
    const TripleSet filter = filter_of(c);
    for (const auto& tr : c.test) {
      for (Side side : {Side::kHead, Side::kTail}) {
        CHECK(filtered_rank(c.emb, tr, side, filter) == oracle_rank(c.emb, tr, side, filter));
      }
    }
    const auto rep = evaluate(c.emb, c.test, filter, 2);
    REQUIRE(rep.per_triple.size() == c.test.size());
    for (std::size_t i = 0; i < c.test.size(); ++i) {
      CHECK(rep.per_triple[i].triple == c.test[i]);
      CHECK(rep.per_triple[i].head_rank == oracle_rank(c.emb, c.test[i], Side::kHead, filter));
      CHECK(rep.per_triple[i].tail_rank == oracle_rank(c.emb, c.test[i], Side::kTail, filter));
    }
    check_identities(rep);
  }
}

TEST_CASE("adding known triples to the filter never raises a rank") {
  for (std::uint64_t seed = 300; seed < 350; ++seed) {
    const Case c = random_case(seed);
    TripleSet small(c.emb.num_entities(), c.emb.num_relations());
    small.insert(c.test);
    const TripleSet full = filter_of(c);
    for (const auto& tr : c.test) {
      for (Side side : {Side::kHead, Side::kTail}) {
        CHECK(filtered_rank(c.emb, tr, side, full) <= filtered_rank(c.emb, tr, side, small));
      }
    }
  }
}

TEST_CASE("rank examples") {
  EmbeddingSet emb;
  emb.entities = Matrix(3, 1);
  emb.relations = Matrix(1, 1);
  emb.entities(0, 0) = 0.0;
  emb.entities(1, 0) = 1.0;
  emb.entities(2, 0) = 3.0;
  emb.relations(0, 0) = 1.0;
  TripleSet none(3, 1);
  // 0 + 1 = 1: tail 1 is exact, head 0 is exact.
  CHECK(filtered_rank(emb, {0, 0, 1}, Side::kTail, none) == 1);
  CHECK(filtered_rank(emb, {0, 0, 1}, Side::kHead, none) == 1);
  // Tail 2 scores 2, beaten by tail 1 (0) and tail 0 (1).
  CHECK(filtered_rank(emb, {0, 0, 2}, Side::kTail, none) == 3);
  // Filtering every competitor leaves rank 1.
  TripleSet all(3, 1);
  for (EntityId t = 0; t < 3; ++t) all.insert({0, 0, t});
  CHECK(filtered_rank(emb, {0, 0, 2}, Side::kTail, all) == 1);
  // Constant model: every candidate ties, so the rank is |E|.
  EmbeddingSet flat = emb;
  flat.entities.fill(0.0);
  CHECK(filtered_rank(flat, {0, 0, 1}, Side::kTail, none) == 3);
}

TEST_CASE("metric arithmetic") {
  const std::vector<std::size_t> ranks{1, 10};
  const auto r = report_from_ranks(ranks);
  CHECK(r.mr == doctest::Approx(5.5));
  CHECK(r.mrr == doctest::Approx(0.55));
  CHECK(r.hits.at(1) == 0.5);
  CHECK(r.hits.at(3) == 0.5);
  CHECK(r.hits.at(10) == 1.0);

  const std::vector<std::size_t> ones{1, 1, 1, 1};
  const auto p = report_from_ranks(ones);
  CHECK(p.mr == 1.0);
  CHECK(p.mrr == 1.0);
  for (auto k : kHitsAt) CHECK(p.hits.at(k) == 1.0);
}

TEST_CASE("MRR recomputed from per-triple ranks matches") {
  const Case c = random_case(77);
  const auto rep = evaluate(c.emb, c.test, filter_of(c));
  double s = 0.0;
  for (const auto& rt : rep.per_triple) s += 1.0 / rt.head_rank + 1.0 / rt.tail_rank;
  CHECK(std::abs(s / (2.0 * rep.per_triple.size()) - rep.mrr) <= 1e-12);
  CHECK(rep.num_ranks == 2 * c.test.size());
}

TEST_CASE("evaluate does not depend on the worker count") {
  const Case c = random_case(5);
  const auto a = evaluate(c.emb, c.test, filter_of(c), 1);
  const auto b = evaluate(c.emb, c.test, filter_of(c), 4);
  CHECK(a.mr == b.mr);
  CHECK(a.mrr == b.mrr);
  CHECK_THROWS_AS(evaluate(c.emb, {}, filter_of(c)), ConfigError);
}

TEST_CASE("make_filter deduplicates all splits") {
  const auto vocab = kghait::testing::numbered_vocab(4, 1);
  const auto ds = make_dataset(vocab, {{0, 0, 1}, {0, 0, 1}}, {{1, 0, 2}}, {{2, 0, 3}, {0, 0, 1}});
  const auto f = make_filter(ds);
  CHECK(f.size() == 3);
  CHECK(f.contains({2, 0, 3}));
}

TEST_CASE("report table formatting") {
  const std::vector<std::size_t> ranks{1, 10};
  const std::string table = format_report_table({{"TransE", report_from_ranks(ranks)}});
  CHECK(table.find("0.550") != std::string::npos);
  CHECK(table.find("5.5") != std::string::npos);
  CHECK(table.find("H@10") != std::string::npos);
}

TEST_CASE("convergence curves") {
  TrainingLog log;
  log.epochs.push_back({10, 1.0, std::nullopt});
  log.epochs.push_back({25, 0.9, ValidationMetrics{50, 0.1, 0.0, 0.0, 0.1}});
  log.epochs.push_back({50, 0.8, ValidationMetrics{40, 0.2, 0.0, 0.0, 0.2}});
  log.epochs.push_back({75, 0.7, ValidationMetrics{39, 0.21, 0.0, 0.0, 0.21}});
  const auto curve = convergence_curve(log, CurveMetric::kHits10, 25);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].epoch == 25);
  // |0.2 - 0.21| = 0.01 <= 0.05 * 0.21, so epoch 50 is already within 5%.
  CHECK(epochs_to_within(curve) == 50);
  CHECK(epochs_to_within(convergence_curve(log, CurveMetric::kMR, 25)) == 50);

  TrainingLog flat;
  for (std::size_t e : {25, 50, 75}) flat.epochs.push_back({e, 0.0, ValidationMetrics{3, .5, .5, .5, .5}});
  CHECK(epochs_to_within(convergence_curve(flat, CurveMetric::kHits10)) == 25);

  TrainingLog empty;
  empty.epochs.push_back({1, 0.5, std::nullopt});
  CHECK_THROWS_AS(convergence_curve(empty, CurveMetric::kHits10), DataError);
  CHECK_THROWS_AS(parse_curve_metric("auc"), ConfigError);
}

TEST_CASE("training log CSV round trip") {
  kghait::testing::TempDir dir("log");
  TrainingLog log;
  log.epochs.push_back({1, 0.125, std::nullopt});
  log.epochs.push_back({2, 0.1 / 3.0, ValidationMetrics{12.5, 0.3, 0.1, 0.2, 0.45}});
  write_training_log(dir / "log.csv", log);
  const auto back = read_training_log(dir / "log.csv");
  REQUIRE(back.epochs.size() == 2);
  CHECK_FALSE(back.epochs[0].validation);
  CHECK(back.epochs[1].loss == log.epochs[1].loss);
  REQUIRE(back.epochs[1].validation);
  CHECK(back.epochs[1].validation->hits10 == 0.45);
  CHECK(back.epochs[1].validation->mr == 12.5);
}

TEST_CASE("similarity report") {
  kghait::testing::TempDir dir("sim");
  Vocabulary vocab;
  for (const char* n : {"/m/a", "/m/b", "/m/c", "/m/d"}) vocab.intern(n);
  Matrix v(4, 2);
  v(0, 0) = 1.0;
  v(1, 0) = 2.0;
  v(1, 1) = 0.1;
  v(2, 1) = 1.0;
  v(3, 0) = 0.2;
  v(3, 1) = 1.0;

  {
    std::ofstream g(dir / "groups.tsv");
    g << "x\t/m/a\nx\tBee\nx\t/m/a\ny\t/m/c\ny\t/m/d\nsolo\t/m/d\n";
    std::ofstream a(dir / "aliases.tsv");
    a << "/m/b\tBee\n/m/c\tSea\n";
  }
  const auto groups = read_groups(dir / "groups.tsv");
  CHECK(groups.groups.size() == 3);
  CHECK(groups.groups[0].members.size() == 2);
  CHECK(groups.warnings.size() == 1);

  const auto rep = similarity_report(v, groups.groups, vocab, read_aliases(dir / "aliases.tsv"));
  REQUIRE(rep.names.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(rep.matrix(i, i) == doctest::Approx(1.0));
    for (std::size_t j = 0; j < 5; ++j) CHECK(rep.matrix(i, j) == rep.matrix(j, i));
  }
  CHECK(rep.within_group_means[2] == 1.0);
  CHECK(rep.within_group_means[0] > rep.cross_group_mean);
  CHECK(rep.within_group_means[1] > rep.cross_group_mean);
  CHECK(rep.within_group_means[0] == doctest::Approx(cosine(v.row(0), v.row(1))));

  std::vector<EntityGroup> bad{{"x", {"/m/a", "nope", "also-nope"}}};
  try {
    similarity_report(v, bad, vocab);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("nope, also-nope") != std::string::npos);
  }
  { std::ofstream(dir / "empty.tsv"); }
  CHECK_THROWS_AS(read_groups(dir / "empty.tsv"), ConfigError);

  write_similarity_csv(dir / "sim.csv", rep);
  CHECK(std::filesystem::file_size(dir / "sim.csv") > 0);
}
