#include "kghait/hif.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "kghait/binary_io.hpp"
#include "kghait/error.hpp"
#include "kghait/parallel.hpp"

namespace kghait {

std::string_view to_string(Semiring s) {
  switch (s) {
    case Semiring::kConcreteMaxDecay: return "concrete-max-decay";
    case Semiring::kSumProduct: return "sum-product";
    case Semiring::kMaxProduct: return "max-product";
  }
  return "unknown";
}

Semiring parse_semiring(std::string_view name) {
  if (name == "concrete-max-decay" || name == "concrete") return Semiring::kConcreteMaxDecay;
  if (name == "sum-product") return Semiring::kSumProduct;
  if (name == "max-product") return Semiring::kMaxProduct;
  throw ConfigError("unknown semiring '" + std::string(name) +
                    "' (expected concrete-max-decay, sum-product or max-product)");
}

void DpConfig::validate() const {
  if (iterations < 1) {
    throw ConfigError("DP iterations T must be >= 1, got " + std::to_string(iterations));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("DP decay alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

std::vector<double> entity_identity(const KnowledgeGraph& graph, EntityId u) {
  std::vector<double> e(graph.num_relations(), 0.0);
  const auto& triples = graph.triples();
  for (auto p : graph.out_triples(u)) e[triples[p].relation] += 1.0;
  for (auto p : graph.in_triples(u)) e[triples[p].relation] -= 1.0;
  return e;
}

Matrix entity_identities(const KnowledgeGraph& graph) {
  Matrix m(graph.num_entities(), graph.num_relations());
  for (const auto& t : graph.triples()) {
    m(t.head, t.relation) += 1.0;
    m(t.tail, t.relation) -= 1.0;
  }
  return m;
}

namespace {

void check_weights(const KnowledgeGraph& graph, const DpConfig& config) {
  if (config.triple_weights && (config.triple_weights->rows() != graph.triples().size() ||
                                config.triple_weights->cols() != graph.num_relations())) {
    throw ConfigError("triple weight matrix must be |triples| x |R|");
  }
}

// Folds every contribution v(p) (.) prev[neighbor(p)] of one side into `acc`
// with the semiring's addition. Returns false when the side is empty.
template <typename Neighbor>
bool aggregate_side(std::span<double> acc, std::span<const TripleIndex> side,
                    const KnowledgeGraph& graph, const Matrix& prev, const DpConfig& config,
                    bool seeded, Neighbor neighbor) {
  const bool additive = config.semiring == Semiring::kSumProduct;
  const std::size_t d = acc.size();
  bool first = !seeded;
  for (auto p : side) {
    const auto src = prev.row(neighbor(graph.triples()[p]));
    for (std::size_t k = 0; k < d; ++k) {
      const double c = config.weight(p, k) * src[k];
      if (first) {
        acc[k] = c;
      } else if (additive) {
        acc[k] += c;
      } else {
        acc[k] = std::max(acc[k], c);
      }
    }
    first = false;
  }
  return !side.empty();
}

HifMatrix step_with_identity(const KnowledgeGraph& graph, const Matrix& identity,
                             const HifMatrix& prev, const DpConfig& config, std::size_t jobs) {
  const std::size_t n = graph.num_entities();
  const std::size_t d = graph.num_relations();
  HifMatrix next;
  next.data = Matrix(n, d);
  next.iterations_used = prev.iterations_used + 1;
  next.alpha = config.alpha;
  next.semiring = config.semiring;
  next.include_identity_each_step = config.include_identity_each_step;

  const bool seeded = config.include_identity_each_step;
  parallel_for(
      n,
      [&](std::size_t u) {
        std::vector<double> in_acc(d);
        std::vector<double> out_acc(d);
        const auto e = identity.row(u);
        if (seeded) {
          std::copy(e.begin(), e.end(), in_acc.begin());
          std::copy(e.begin(), e.end(), out_acc.begin());
        }
        const auto uid = static_cast<EntityId>(u);
        if (!aggregate_side(in_acc, graph.in_triples(uid), graph, prev.data, config, seeded,
                            [](const Triple& t) { return t.head; }) &&
            !seeded) {
          std::copy(e.begin(), e.end(), in_acc.begin());
        }
        if (!aggregate_side(out_acc, graph.out_triples(uid), graph, prev.data, config, seeded,
                            [](const Triple& t) { return t.tail; }) &&
            !seeded) {
          std::copy(e.begin(), e.end(), out_acc.begin());
        }
        auto row = next.data.row(u);
        for (std::size_t k = 0; k < d; ++k) {
          switch (config.semiring) {
            case Semiring::kConcreteMaxDecay: row[k] = out_acc[k] - in_acc[k]; break;
            case Semiring::kSumProduct: row[k] = in_acc[k] + out_acc[k]; break;
            case Semiring::kMaxProduct: row[k] = std::max(in_acc[k], out_acc[k]); break;
          }
        }
      },
      jobs);
  return next;
}

}  // namespace

HifMatrix dp_step(const KnowledgeGraph& graph, const HifMatrix& prev, const DpConfig& config,
                  std::size_t jobs) {
  config.validate();
  check_weights(graph, config);
  if (prev.data.rows() != graph.num_entities() || prev.data.cols() != graph.num_relations()) {
    throw ConfigError("previous HIF matrix shape does not match the graph");
  }
  return step_with_identity(graph, entity_identities(graph), prev, config, jobs);
}

HifMatrix build_hif_entity(const KnowledgeGraph& graph, const DpConfig& config,
                           std::size_t jobs) {
  config.validate();
  check_weights(graph, config);
  const Matrix identity = entity_identities(graph);
  HifMatrix w;
  w.data = identity;
  w.iterations_used = 1;
  w.alpha = config.alpha;
  w.semiring = config.semiring;
  w.include_identity_each_step = config.include_identity_each_step;
  for (int t = 2; t <= config.iterations; ++t) {
    w = step_with_identity(graph, identity, w, config, jobs);
  }
  if (!w.data.all_finite()) {
    throw NumericError("HIF dynamic program produced non-finite values");
  }
  return w;
}

double hif_cosine(const HifMatrix& m, EntityId u, EntityId v) {
  const auto a = m.data.row(u);
  const auto b = m.data.row(v);
  if (l2_norm(a) == 0.0 || l2_norm(b) == 0.0) {
    throw NumericError("cosine similarity undefined: HIF row " +
                       std::to_string(l2_norm(a) == 0.0 ? u : v) + " is the zero vector");
  }
  return cosine(a, b);
}

void save_hif(const std::filesystem::path& path, const HifMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write HIF artifact: " + path.string());
  io::write_header(out, io::kHifMagic);
  io::write_u64(out, m.data.rows());
  io::write_u64(out, m.data.cols());
  io::write_u32(out, static_cast<std::uint32_t>(m.iterations_used));
  io::write_f64(out, m.alpha);
  io::write_u32(out, static_cast<std::uint32_t>(m.semiring));
  io::write_u32(out, m.include_identity_each_step ? 1u : 0u);
  io::write_payload(out, m.data);
}

HifMatrix load_hif(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open HIF artifact: " + path.string());
  io::read_header(in, io::kHifMagic, "HIF matrix");
  HifMatrix m;
  const auto rows = io::read_u64(in);
  const auto cols = io::read_u64(in);
  m.iterations_used = static_cast<int>(io::read_u32(in));
  m.alpha = io::read_f64(in);
  const auto tag = io::read_u32(in);
  if (tag > 2) throw DataError("unknown semiring tag in HIF artifact");
  m.semiring = static_cast<Semiring>(tag);
  m.include_identity_each_step = io::read_u32(in) != 0;
  m.data = io::read_payload(in, rows, cols);
  return m;
}

void export_hif_csv(const std::filesystem::path& path, const HifMatrix& m,
                    const Vocabulary& entities) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path.string());
  out << std::setprecision(17);
  out << "entity";
  for (std::size_t k = 0; k < m.dim(); ++k) out << ",r" << k;
  out << '\n';
  for (std::size_t u = 0; u < m.num_entities(); ++u) {
    const auto& name = entities.name(static_cast<EntityId>(u));
    const bool quote = name.find_first_of(",\"") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : name) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    } else {
      out << name;
    }
    for (double v : m.data.row(u)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace kghait
