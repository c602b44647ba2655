#include "kghait/hif_reference.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "kghait/error.hpp"

namespace kghait::reference {
namespace {

using Vec = std::vector<double>;

Vec identity_by_scan(const KnowledgeGraph& g, EntityId x) {
  Vec e(g.num_relations(), 0.0);
  for (const auto& t : g.triples()) {
    if (t.head == x) e[t.relation] += 1.0;
    if (t.tail == x) e[t.relation] -= 1.0;
  }
  return e;
}

std::vector<TripleIndex> incident_by_scan(const KnowledgeGraph& g, EntityId x, bool out) {
  std::vector<TripleIndex> r;
  for (std::size_t i = 0; i < g.triples().size(); ++i) {
    const auto& t = g.triples()[i];
    if ((out ? t.head : t.tail) == x) r.push_back(static_cast<TripleIndex>(i));
  }
  return r;
}

Vec weight_of(const DpConfig& c, TripleIndex p, std::size_t d) {
  Vec v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = c.weight(p, k);
  return v;
}

Vec hadamard(const Vec& a, const Vec& b) {
  Vec r(a.size());
  std::transform(a.begin(), a.end(), b.begin(), r.begin(), std::multiplies<>());
  return r;
}

Vec plus(const Vec& a, const Vec& b) {
  Vec r(a.size());
  std::transform(a.begin(), a.end(), b.begin(), r.begin(), std::plus<>());
  return r;
}

Vec emax(const Vec& a, const Vec& b) {
  Vec r(a.size());
  std::transform(a.begin(), a.end(), b.begin(), r.begin(),
                 [](double x, double y) { return std::max(x, y); });
  return r;
}

std::size_t tree_size(const KnowledgeGraph& g, EntityId x, int s,
                      std::map<std::pair<EntityId, int>, std::size_t>& memo) {
  if (s <= 1) return 1;
  if (auto it = memo.find({x, s}); it != memo.end()) return it->second;
  std::size_t n = 1;
  for (const auto& t : g.triples()) {
    if (t.tail == x) n += tree_size(g, t.head, s - 1, memo);
    if (t.head == x) n += tree_size(g, t.tail, s - 1, memo);
    if (n > kMaxExpansions) break;
  }
  memo[{x, s}] = n;
  return n;
}

Vec recurse(const KnowledgeGraph& g, EntityId x, int s, const DpConfig& c) {
  if (s == 1) return identity_by_scan(g, x);
  const std::size_t d = g.num_relations();
  const Vec e = identity_by_scan(g, x);

  auto add = [&](const Vec& a, const Vec& b) {
    return c.semiring == Semiring::kSumProduct ? plus(a, b) : emax(a, b);
  };
  auto side = [&](bool out) {
    std::optional<Vec> acc;
    if (c.include_identity_each_step) acc = e;
    for (auto p : incident_by_scan(g, x, out)) {
      const auto& t = g.triples()[p];
      Vec term = hadamard(weight_of(c, p, d), recurse(g, out ? t.tail : t.head, s - 1, c));
      acc = acc ? add(*acc, term) : term;
    }
    return acc.value_or(e);
  };

  const Vec in = side(false);
  const Vec out = side(true);
  if (c.semiring == Semiring::kConcreteMaxDecay) {
    Vec r(d);
    for (std::size_t k = 0; k < d; ++k) r[k] = out[k] - in[k];
    return r;
  }
  return add(in, out);
}

struct Enumerator {
  const KnowledgeGraph& g;
  const DpConfig& c;
  std::vector<PathFeature> out;
  std::vector<PathStep> path;
  Vec weight;

  void emit(EntityId endpoint, bool seed_out_side) {
    if (out.size() >= kMaxExpansions) {
      throw OracleScaleError("path enumeration exceeds " + std::to_string(kMaxExpansions) +
                             " paths");
    }
    PathFeature f;
    f.path = path;
    f.endpoint = endpoint;
    f.out_side = path.empty() ? seed_out_side : path.front().forward;
    f.value = hadamard(weight, identity_by_scan(g, endpoint));
    out.push_back(std::move(f));
  }

  void walk(EntityId x, int s) {
    if (s == 1) {
      emit(x, true);
      return;
    }
    for (bool forward : {false, true}) {
      const auto side = incident_by_scan(g, x, forward);
      if (c.include_identity_each_step || side.empty()) emit(x, forward);
      for (auto p : side) {
        const auto& t = g.triples()[p];
        const Vec saved = weight;
        weight = hadamard(weight, weight_of(c, p, g.num_relations()));
        path.push_back({p, forward});
        walk(forward ? t.tail : t.head, s - 1);
        path.pop_back();
        weight = saved;
      }
    }
  }
};

}  // namespace

std::vector<double> reference_recursion(const KnowledgeGraph& graph, EntityId u, int t,
                                        const DpConfig& config) {
  config.validate();
  if (u >= graph.num_entities()) throw ConfigError("entity id out of range");
  std::map<std::pair<EntityId, int>, std::size_t> memo;
  if (tree_size(graph, u, t, memo) > kMaxExpansions) {
    throw OracleScaleError("reference recursion exceeds " + std::to_string(kMaxExpansions) +
                           " expansions");
  }
  return recurse(graph, u, t, config);
}

std::vector<PathFeature> enumerate_path_features(const KnowledgeGraph& graph, EntityId u, int t,
                                                 const DpConfig& config) {
  config.validate();
  if (config.semiring != Semiring::kSumProduct) {
    throw ConfigError("path-feature enumeration is defined for the sum-product semiring only");
  }
  if (u >= graph.num_entities()) throw ConfigError("entity id out of range");
  Enumerator en{graph, config, {}, {}, Vec(graph.num_relations(), 1.0)};
  en.walk(u, t);
  return std::move(en.out);
}

std::vector<double> aggregate_path_features(const std::vector<PathFeature>& features,
                                            std::size_t dim) {
  Vec in(dim, 0.0);
  Vec out(dim, 0.0);
  for (const auto& f : features) {
    auto& side = f.out_side ? out : in;
    for (std::size_t k = 0; k < dim; ++k) side[k] += f.value[k];
  }
  return plus(in, out);
}

}  // namespace kghait::reference
