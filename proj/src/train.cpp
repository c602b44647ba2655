#include "kghait/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "kghait/adam.hpp"
#include "kghait/error.hpp"
#include "kghait/eval.hpp"

namespace kghait {
namespace {

void uniform_fill(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : m.values()) v = u(rng);
}

Matrix rectangular_identity(std::size_t num_relations, std::size_t dr, std::size_t de) {
  Matrix p(num_relations, dr * de);
  for (std::size_t r = 0; r < num_relations; ++r) {
    for (std::size_t i = 0; i < std::min(dr, de); ++i) p(r, i * de + i) = 1.0;
  }
  return p;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(std::string(what) + " has shape " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
}

ValidationMetrics to_metrics(const RankingReport& r) {
  return {r.mr, r.mrr, r.hits.at(1), r.hits.at(3), r.hits.at(10)};
}

}  // namespace

std::string_view to_string(InitMode m) { return m == InitMode::kHif ? "hif" : "random"; }

InitMode parse_init(std::string_view name) {
  if (name == "random") return InitMode::kRandom;
  if (name == "hif") return InitMode::kHif;
  throw ConfigError("unknown init '" + std::string(name) + "' (expected random or hif)");
}

void TrainConfig::validate() const {
  if (norm_p != 1 && norm_p != 2) throw ConfigError("norm_p must be 1 or 2");
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (negatives_per_positive < 1) throw ConfigError("negatives per positive must be at least 1");
  if (entity_dim < 1 || relation_dim < 1) throw ConfigError("embedding dimensions must be positive");
  if (model != ModelKind::kTransR && relation_dim != entity_dim) {
    throw ConfigError(std::string(to_string(model)) + " requires relation_dim == entity_dim");
  }
}

double margin_loss(double pos_score, double neg_score, double margin) {
  return std::max(0.0, margin + pos_score - neg_score);
}

NegativeSampler::NegativeSampler(const TripleSet& train, std::size_t num_entities)
    : train_(train), num_entities_(num_entities) {
  if (num_entities < 2) throw ConfigError("negative sampling needs at least two entities");
}

Triple NegativeSampler::sample(const Triple& positive, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(num_entities_ - 1));
  const bool head = coin(rng);
  Triple out = positive;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    (head ? out.head : out.tail) = pick(rng);
    if (!train_.contains(out)) return out;
  }
  ++warnings_;
  return out;
}

EmbeddingSet init_embeddings(const TrainConfig& config, std::size_t num_entities,
                             std::size_t num_relations, const InitSources& sources) {
  config.validate();
  const std::size_t de = config.entity_dim;
  const std::size_t dr = config.relation_dim;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  EmbeddingSet e;
  e.model = config.model;
  e.norm_p = config.norm_p;
  e.entities = Matrix(num_entities, de);
  e.relations = Matrix(num_relations, dr);
  uniform_fill(e.entities, 6.0 / std::sqrt(static_cast<double>(de)), rng);
  uniform_fill(e.relations, 6.0 / std::sqrt(static_cast<double>(dr)), rng);
  normalize_rows(e.entities);
  normalize_rows(e.relations);
  if (e.model == ModelKind::kTransH) {
    e.normals = Matrix(num_relations, de);
    std::normal_distribution<double> normal;
    for (double& v : e.normals.values()) v = normal(rng);
    normalize_rows(e.normals);
  }
  if (e.model == ModelKind::kTransR) e.projections = rectangular_identity(num_relations, dr, de);

  if (sources.inherit_from) {
    const auto& src = *sources.inherit_from;
    require_shape(src.entities, num_entities, de, "inherited entity matrix");
    require_shape(src.relations, num_relations, dr, "inherited relation matrix");
    e.entities = src.entities;
    e.relations = src.relations;
  }

  if (config.init == InitMode::kHif) {
    if (!sources.hif_entities || !sources.hif_relations) {
      throw ConfigError("init=hif needs both HIF-entity and HIF-relation matrices");
    }
    require_shape(*sources.hif_entities, num_entities, de, "HIF-entity matrix");
    const auto& rel = *sources.hif_relations;
    require_shape(rel.relations, num_relations, dr, "HIF-relation matrix");
    if (rel.model != e.model) {
      throw ConfigError("HIF-relation matrices were bootstrapped for " +
                        std::string(to_string(rel.model)) + ", not " +
                        std::string(to_string(e.model)));
    }
    e.entities = *sources.hif_entities;
    e.relations = rel.relations;
    if (e.model == ModelKind::kTransH) e.normals = rel.normals;
    if (e.model == ModelKind::kTransR) e.projections = rel.projections;
  }
  e.validate();
  return e;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, EmbeddingSet emb,
                  const TrainHooks& hooks) {
  config.validate();
  if (dataset.train.empty()) throw ConfigError("train split is empty");
  emb.validate();
  if (emb.num_entities() != dataset.num_entities() ||
      emb.num_relations() != dataset.num_relations()) {
    throw ConfigError("embedding table does not match the dataset vocabulary");
  }
  if (emb.model != config.model || emb.norm_p != config.norm_p) {
    throw ConfigError("embedding model or norm does not match the training config");
  }

  TripleSet train_set(dataset.num_entities(), dataset.num_relations());
  train_set.insert(dataset.train);
  NegativeSampler sampler(train_set, dataset.num_entities());
  std::mt19937_64 rng(config.seed);
  const AdamSettings adam{config.lr};
  AdamSlot entity_slot(emb.entities), relation_slot(emb.relations), normal_slot(emb.normals),
      projection_slot(emb.projections);
  auto grad = EmbeddingGradient::zeros_like(emb);

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  const bool validating = config.eval_every > 0 && !hooks.validation.empty();
  std::optional<TripleSet> own_filter;
  const TripleSet* filter = hooks.filter;
  if (validating && !filter) {
    own_filter.emplace(make_filter(dataset));
    filter = &*own_filter;
  }

  TrainResult result;
  std::optional<EmbeddingSet> best;
  double best_mrr = -1.0;
  std::size_t stale = 0;
  std::size_t step = 0;
  const double pairs_per_batch_scale = 1.0 / static_cast<double>(config.negatives_per_positive);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = pairs_per_batch_scale / static_cast<double>(end - begin);
      grad.clear();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const Triple& pos = dataset.train[order[k]];
        const double pos_score = score(emb, pos);
        for (std::size_t n = 0; n < config.negatives_per_positive; ++n) {
          const Triple neg = sampler.sample(pos, rng);
          const double loss = margin_loss(pos_score, score(emb, neg), config.margin);
          batch_loss += loss;
          if (loss > 0.0) {
            accumulate_score_gradient(emb, pos, scale, grad);
            accumulate_score_gradient(emb, neg, -scale, grad);
          }
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training loss became non-finite in epoch " + std::to_string(epoch) +
                           "; try a lower learning rate");
      }
      epoch_loss += batch_loss;
      ++step;
      if (!config.freeze_entities) entity_slot.update(emb.entities, grad.entities, adam, step);
      relation_slot.update(emb.relations, grad.relations, adam, step);
      if (emb.model == ModelKind::kTransH) normal_slot.update(emb.normals, grad.normals, adam, step);
      if (emb.model == ModelKind::kTransR) {
        projection_slot.update(emb.projections, grad.projections, adam, step);
      }
      if (!config.freeze_entities) project_rows_to_unit_ball(emb.entities);
      if (emb.model == ModelKind::kTransH) normalize_rows(emb.normals);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss = epoch_loss / static_cast<double>(order.size() * config.negatives_per_positive);
    if (!std::isfinite(record.loss) || !emb.all_finite()) {
      throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch) +
                         "; try a lower learning rate");
    }
    bool stop = false;
    if (validating && epoch % config.eval_every == 0) {
      record.validation = to_metrics(evaluate(emb, hooks.validation, *filter, hooks.jobs));
      if (record.validation->mrr > best_mrr) {
        best_mrr = record.validation->mrr;
        result.log.best_epoch = epoch;
        stale = 0;
        if (config.restore_best) best = emb;
      } else if (config.patience > 0 && ++stale >= config.patience) {
        stop = true;
      }
    }
    result.log.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record, emb);

    const auto& hist = result.log.epochs;
    if (config.plateau_window > 0 && hist.size() > config.plateau_window) {
      const double before = hist[hist.size() - 1 - config.plateau_window].loss;
      if (before - record.loss < config.plateau_tolerance) stop = true;
    }
    if (stop) {
      result.log.early_stopped = true;
      break;
    }
  }

  result.log.sampler_warnings = sampler.warnings();
  if (best) {
    result.embeddings = std::move(*best);
  } else {
    result.log.best_epoch = result.log.epochs.back().epoch;
    result.embeddings = std::move(emb);
  }
  return result;
}

}  // namespace kghait
