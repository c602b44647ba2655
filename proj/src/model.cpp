#include "kghait/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "kghait/binary_io.hpp"
#include "kghait/error.hpp"

namespace kghait {

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kTransH: return "transh";
    case ModelKind::kTransR: return "transr";
  }
  return "unknown";
}

ModelKind parse_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "transe") return ModelKind::kTransE;
  if (lower == "transh") return ModelKind::kTransH;
  if (lower == "transr") return ModelKind::kTransR;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected transe, transh or transr)");
}

void EmbeddingSet::validate() const {
  if (norm_p != 1 && norm_p != 2) throw ConfigError("norm_p must be 1 or 2");
  if (entities.cols() == 0 || relations.cols() == 0) {
    throw ConfigError("embedding dimensions must be positive");
  }
  const auto nr = relations.rows();
  switch (model) {
    case ModelKind::kTransE:
    case ModelKind::kTransH:
      if (relation_dim() != entity_dim()) {
        throw ConfigError(std::string(to_string(model)) + " requires d_r == d_e");
      }
      if (model == ModelKind::kTransH &&
          (normals.rows() != nr || normals.cols() != entity_dim())) {
        throw ConfigError("transh normals must be |R| x d_e");
      }
      break;
    case ModelKind::kTransR:
      if (projections.rows() != nr || projections.cols() != relation_dim() * entity_dim()) {
        throw ConfigError("transr projections must be |R| x (d_r * d_e)");
      }
      break;
  }
}

bool EmbeddingSet::all_finite() const {
  return entities.all_finite() && relations.all_finite() && normals.all_finite() &&
         projections.all_finite();
}

EmbeddingGradient EmbeddingGradient::zeros_like(const EmbeddingSet& emb) {
  EmbeddingGradient g;
  g.entities = Matrix(emb.entities.rows(), emb.entities.cols());
  g.relations = Matrix(emb.relations.rows(), emb.relations.cols());
  g.normals = Matrix(emb.normals.rows(), emb.normals.cols());
  g.projections = Matrix(emb.projections.rows(), emb.projections.cols());
  return g;
}

void EmbeddingGradient::clear() {
  entities.fill(0.0);
  relations.fill(0.0);
  normals.fill(0.0);
  projections.fill(0.0);
}

void project_entity(const EmbeddingSet& emb, RelationId r, std::span<const double> entity,
                    std::span<double> out) {
  switch (emb.model) {
    case ModelKind::kTransE:
      std::copy(entity.begin(), entity.end(), out.begin());
      break;
    case ModelKind::kTransH: {
      const auto n = emb.normals.row(r);
      const double a = dot(n, entity);
      for (std::size_t k = 0; k < entity.size(); ++k) out[k] = entity[k] - a * n[k];
      break;
    }
    case ModelKind::kTransR: {
      const auto m = emb.projections.row(r);
      const std::size_t de = entity.size();
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = dot(m.subspan(i * de, de), entity);
      }
      break;
    }
  }
}

double translation_distance(std::span<const double> fh, std::span<const double> rel,
                            std::span<const double> ft, int norm_p) {
  double s = 0.0;
  if (norm_p == 1) {
    for (std::size_t k = 0; k < rel.size(); ++k) s += std::abs((fh[k] + rel[k]) - ft[k]);
    return s;
  }
  for (std::size_t k = 0; k < rel.size(); ++k) {
    const double x = (fh[k] + rel[k]) - ft[k];
    s += x * x;
  }
  return std::sqrt(s);
}

namespace {

struct Scratch {
  std::vector<double> fh, ft, g, delta;
  void resize(std::size_t dr, std::size_t de) {
    fh.resize(dr);
    ft.resize(dr);
    g.resize(dr);
    delta.resize(de);
  }
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

double score(const EmbeddingSet& emb, EntityId h, RelationId r, EntityId t) {
  auto& s = scratch();
  s.resize(emb.relation_dim(), emb.entity_dim());
  project_entity(emb, r, emb.entities.row(h), s.fh);
  project_entity(emb, r, emb.entities.row(t), s.ft);
  return translation_distance(s.fh, emb.relations.row(r), s.ft, emb.norm_p);
}

void accumulate_score_gradient(const EmbeddingSet& emb, const Triple& tr, double coeff,
                               EmbeddingGradient& grad) {
  auto& s = scratch();
  const std::size_t dr = emb.relation_dim();
  const std::size_t de = emb.entity_dim();
  s.resize(dr, de);
  const auto h = emb.entities.row(tr.head);
  const auto t = emb.entities.row(tr.tail);
  const auto rel = emb.relations.row(tr.relation);
  project_entity(emb, tr.relation, h, s.fh);
  project_entity(emb, tr.relation, t, s.ft);

  // g = d ||x||_p / dx at x = (fh + r) - ft.
  if (emb.norm_p == 1) {
    for (std::size_t k = 0; k < dr; ++k) {
      const double x = (s.fh[k] + rel[k]) - s.ft[k];
      s.g[k] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
  } else {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < dr; ++k) {
      s.g[k] = (s.fh[k] + rel[k]) - s.ft[k];
      norm2 += s.g[k] * s.g[k];
    }
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (auto& v : s.g) v *= inv;
  }
  for (std::size_t k = 0; k < de; ++k) s.delta[k] = h[k] - t[k];

  auto gr = grad.relations.row(tr.relation);
  for (std::size_t k = 0; k < dr; ++k) gr[k] += coeff * s.g[k];
  auto gh = grad.entities.row(tr.head);
  auto gt = grad.entities.row(tr.tail);

  switch (emb.model) {
    case ModelKind::kTransE:
      for (std::size_t k = 0; k < de; ++k) {
        gh[k] += coeff * s.g[k];
        gt[k] -= coeff * s.g[k];
      }
      break;
    case ModelKind::kTransH: {
      const auto n = emb.normals.row(tr.relation);
      const double ng = dot(n, s.g);
      const double nd = dot(n, s.delta);
      auto gn = grad.normals.row(tr.relation);
      for (std::size_t k = 0; k < de; ++k) {
        const double dk = s.g[k] - ng * n[k];
        gh[k] += coeff * dk;
        gt[k] -= coeff * dk;
        gn[k] -= coeff * (nd * s.g[k] + ng * s.delta[k]);
      }
      break;
    }
    case ModelKind::kTransR: {
      const auto m = emb.projections.row(tr.relation);
      auto gm = grad.projections.row(tr.relation);
      for (std::size_t i = 0; i < dr; ++i) {
        const double gi = coeff * s.g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < de; ++j) {
          gh[j] += gi * m[i * de + j];
          gt[j] -= gi * m[i * de + j];
          gm[i * de + j] += gi * s.delta[j];
        }
      }
      break;
    }
  }
}

void project_rows_to_unit_ball(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = l2_norm(row);
    if (n > 1.0) {
      for (auto& v : row) v /= n;
    }
  }
}

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = l2_norm(row);
    if (n > 0.0) {
      for (auto& v : row) v /= n;
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const EmbeddingSet& emb,
                     const CheckpointInfo& info) {
  emb.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  io::write_header(out, io::kCheckpointMagic);
  io::write_u32(out, static_cast<std::uint32_t>(emb.model));
  io::write_u32(out, static_cast<std::uint32_t>(emb.norm_p));
  io::write_u64(out, emb.entity_dim());
  io::write_u64(out, emb.relation_dim());
  io::write_u64(out, emb.num_entities());
  io::write_u64(out, emb.num_relations());
  io::write_u64(out, info.epoch);
  io::write_u64(out, info.config_hash);
  io::write_u32(out, info.bootstrap ? 1u : 0u);
  io::write_payload(out, emb.entities);
  io::write_payload(out, emb.relations);
  if (emb.model == ModelKind::kTransH) io::write_payload(out, emb.normals);
  if (emb.model == ModelKind::kTransR) io::write_payload(out, emb.projections);
}

EmbeddingSet load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  io::read_header(in, io::kCheckpointMagic, "checkpoint");
  EmbeddingSet emb;
  const auto tag = io::read_u32(in);
  if (tag > 2) throw DataError("unknown model tag in checkpoint");
  emb.model = static_cast<ModelKind>(tag);
  emb.norm_p = static_cast<int>(io::read_u32(in));
  const auto de = io::read_u64(in);
  const auto dr = io::read_u64(in);
  const auto ne = io::read_u64(in);
  const auto nr = io::read_u64(in);
  CheckpointInfo ci;
  ci.epoch = io::read_u64(in);
  ci.config_hash = io::read_u64(in);
  ci.bootstrap = io::read_u32(in) != 0;
  emb.entities = io::read_payload(in, ne, de);
  emb.relations = io::read_payload(in, nr, dr);
  if (emb.model == ModelKind::kTransH) emb.normals = io::read_payload(in, nr, de);
  if (emb.model == ModelKind::kTransR) emb.projections = io::read_payload(in, nr, dr * de);
  emb.validate();
  if (info) *info = ci;
  return emb;
}

}  // namespace kghait
