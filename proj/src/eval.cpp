#include "kghait/eval.hpp"

#include <fmt/format.h>

#include <fstream>
#include <numeric>

#include "kghait/error.hpp"
#include "kghait/parallel.hpp"

namespace kghait {
namespace {

// Entity rows mapped into relation space for one relation. TransE keeps the
// raw rows, so the cache is skipped there.
class ProjectedEntities {
 public:
  ProjectedEntities(const EmbeddingSet& emb, RelationId r, std::size_t jobs) : emb_(emb) {
    if (emb.model == ModelKind::kTransE) return;
    cache_ = Matrix(emb.num_entities(), emb.relation_dim());
    parallel_for(
        emb.num_entities(),
        [&](std::size_t e) { project_entity(emb, r, emb.entities.row(e), cache_.row(e)); },
        jobs);
  }

  std::span<const double> row(EntityId e) const {
    return emb_.model == ModelKind::kTransE ? emb_.entities.row(e) : cache_.row(e);
  }

 private:
  const EmbeddingSet& emb_;
  Matrix cache_;
};

std::size_t rank_with(const EmbeddingSet& emb, const ProjectedEntities& proj, const Triple& tr,
                      Side side, const TripleSet& filter) {
  const auto rel = emb.relations.row(tr.relation);
  const auto fh = proj.row(tr.head);
  const auto ft = proj.row(tr.tail);
  const double truth = translation_distance(fh, rel, ft, emb.norm_p);
  const EntityId target = side == Side::kHead ? tr.head : tr.tail;
  std::size_t rank = 1;
  for (EntityId c = 0; c < emb.num_entities(); ++c) {
    if (c == target) continue;
    const double s = side == Side::kHead ? translation_distance(proj.row(c), rel, ft, emb.norm_p)
                                         : translation_distance(fh, rel, proj.row(c), emb.norm_p);
    if (s > truth) continue;
    const Triple cand = side == Side::kHead ? Triple{c, tr.relation, tr.tail}
                                            : Triple{tr.head, tr.relation, c};
    if (!filter.contains(cand)) ++rank;
  }
  return rank;
}

}  // namespace

std::size_t filtered_rank(const EmbeddingSet& emb, const Triple& triple, Side side,
                          const TripleSet& filter) {
  const ProjectedEntities proj(emb, triple.relation, 1);
  return rank_with(emb, proj, triple, side, filter);
}

RankingReport report_from_ranks(std::span<const std::size_t> ranks) {
  RankingReport rep;
  rep.num_ranks = ranks.size();
  for (auto k : kHitsAt) rep.hits[k] = 0.0;
  if (ranks.empty()) return rep;
  double sum = 0.0;
  double rsum = 0.0;
  std::map<std::size_t, std::size_t> hit_counts;
  for (auto r : ranks) {
    sum += static_cast<double>(r);
    rsum += 1.0 / static_cast<double>(r);
    for (auto k : kHitsAt) {
      if (r <= k) ++hit_counts[k];
    }
  }
  const double n = static_cast<double>(ranks.size());
  rep.mr = sum / n;
  rep.mrr = rsum / n;
  for (auto k : kHitsAt) rep.hits[k] = static_cast<double>(hit_counts[k]) / n;
  return rep;
}

RankingReport evaluate(const EmbeddingSet& emb, std::span<const Triple> test,
                       const TripleSet& filter, std::size_t jobs) {
  if (test.empty()) throw ConfigError("evaluation needs at least one test triple");
  emb.validate();
  std::vector<std::vector<std::size_t>> by_relation(emb.num_relations());
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].head >= emb.num_entities() || test[i].tail >= emb.num_entities() ||
        test[i].relation >= emb.num_relations()) {
      throw DataError("test triple " + std::to_string(i) + " is outside the embedding table");
    }
    by_relation[test[i].relation].push_back(i);
  }

  std::vector<RankedTriple> ranked(test.size());
  for (RelationId r = 0; r < by_relation.size(); ++r) {
    const auto& members = by_relation[r];
    if (members.empty()) continue;
    const ProjectedEntities proj(emb, r, jobs);
    parallel_for(
        members.size(),
        [&](std::size_t k) {
          const auto i = members[k];
          ranked[i].triple = test[i];
          ranked[i].head_rank = rank_with(emb, proj, test[i], Side::kHead, filter);
          ranked[i].tail_rank = rank_with(emb, proj, test[i], Side::kTail, filter);
        },
        jobs);
  }

  std::vector<std::size_t> ranks;
  ranks.reserve(2 * ranked.size());
  for (const auto& rt : ranked) {
    ranks.push_back(rt.head_rank);
    ranks.push_back(rt.tail_rank);
  }
  RankingReport rep = report_from_ranks(ranks);
  rep.per_triple = std::move(ranked);
  return rep;
}

TripleSet make_filter(const Dataset& dataset) {
  TripleSet f(dataset.num_entities(), dataset.num_relations());
  f.insert(dataset.train);
  f.insert(dataset.valid);
  f.insert(dataset.test);
  return f;
}

std::string format_report_table(const std::vector<std::pair<std::string, RankingReport>>& rows) {
  std::size_t width = 5;
  for (const auto& [label, _] : rows) width = std::max(width, label.size());
  std::string out = fmt::format("{:<{}}  {:>10}  {:>6}  {:>6}  {:>6}  {:>6}\n", "model", width,
                                "MR", "MRR", "H@1", "H@3", "H@10");
  for (const auto& [label, r] : rows) {
    out += fmt::format("{:<{}}  {:>10.1f}  {:>6.3f}  {:>6.3f}  {:>6.3f}  {:>6.3f}\n", label, width,
                       r.mr, r.mrr, r.hits.at(1), r.hits.at(3), r.hits.at(10));
  }
  return out;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, RankingReport>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path.string());
  out << "label,mr,mrr,hits1,hits3,hits10,num_ranks\n";
  for (const auto& [label, r] : rows) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", label, r.mr, r.mrr,
                       r.hits.at(1), r.hits.at(3), r.hits.at(10), r.num_ranks);
  }
}

void write_ranks_csv(const std::filesystem::path& path, const RankingReport& report,
                     const Vocabularies& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path.string());
  out << "head,relation,tail,head_rank,tail_rank\n";
  for (const auto& rt : report.per_triple) {
    out << vocab.entities.name(rt.triple.head) << ',' << vocab.relations.name(rt.triple.relation)
        << ',' << vocab.entities.name(rt.triple.tail) << ',' << rt.head_rank << ','
        << rt.tail_rank << '\n';
  }
}

}  // namespace kghait
