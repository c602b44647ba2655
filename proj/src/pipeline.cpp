#include "kghait/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "kghait/curves.hpp"
#include "kghait/error.hpp"
#include "kghait/hif_relation.hpp"

namespace kghait {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kStageOrder[] = {"build-hif", "squeeze", "hif-relation", "train",
                                       "evaluate"};

int checked_int(const Settings& s, std::string_view key) {
  const auto v = s.get_int(key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("config key '" + std::string(key) + "' is out of range");
  }
  return static_cast<int>(v);
}

json metrics_json(const RankingReport& r) {
  return {{"mr", r.mr},
          {"mrr", r.mrr},
          {"hits1", r.hits.at(1)},
          {"hits3", r.hits.at(3)},
          {"hits10", r.hits.at(10)},
          {"num_ranks", r.num_ranks}};
}

json metrics_json(const ValidationMetrics& v) {
  return {{"mr", v.mr}, {"mrr", v.mrr}, {"hits1", v.hits1}, {"hits3", v.hits3}, {"hits10", v.hits10}};
}

class StageRunner {
 public:
  StageRunner(const fs::path& dir, bool resume, const PipelineOptions& options,
              std::vector<StageRecord>& records)
      : dir_(dir), resume_(resume), options_(options), records_(records) {}

  // Runs `make` unless resuming and the artifact exists, in which case
  // `load` reads it back.
  template <typename T, typename Make, typename Load>
  T run(const std::string& name, const std::string& artifact, Make&& make, Load&& load) {
    const auto start = std::chrono::steady_clock::now();
    StageRecord rec{name, 0.0, artifact, false};
    if (options_.log) options_.log("stage " + name);
    try {
      const fs::path path = dir_ / artifact;
      std::optional<T> out;
      if (resume_ && !artifact.empty() && fs::exists(path)) {
        out.emplace(load(path));
        rec.resumed = true;
      } else {
        out.emplace(make(path));
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      records_.push_back(rec);
      return std::move(*out);
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ExitCode::kData, "stage " + name + ": " + e.what());
    }
  }

 private:
  fs::path dir_;
  bool resume_;
  const PipelineOptions& options_;
  std::vector<StageRecord>& records_;
};

std::optional<std::size_t> hits10_convergence(const TrainingLog& log) {
  for (const auto& r : log.epochs) {
    if (r.validation) return epochs_to_within(convergence_curve(log, CurveMetric::kHits10));
  }
  return std::nullopt;
}

}  // namespace

DataPaths resolve_data_paths(const Settings& s) {
  DataPaths p;
  if (!s.get("train").empty()) {
    p.train = s.get("train");
    if (!s.get("valid").empty()) p.valid = s.get("valid");
    if (!s.get("test").empty()) p.test = s.get("test");
  } else if (!s.get("data").empty()) {
    fs::path dir = s.get("data");
    if (!fs::exists(dir) && dir.is_relative()) {
      if (const char* env = std::getenv(kDataDirEnv); env && *env) dir = fs::path(env) / dir;
    }
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    p.train = dir / "train.txt";
    if (fs::exists(dir / "valid.txt")) p.valid = dir / "valid.txt";
    if (fs::exists(dir / "test.txt")) p.test = dir / "test.txt";
  } else {
    throw ConfigError("no dataset given: set 'train' or 'data'");
  }
  auto absolute = [](fs::path& x) {
    if (!x.empty()) x = fs::absolute(x).lexically_normal();
  };
  absolute(p.train);
  absolute(p.valid);
  absolute(p.test);
  return p;
}

Dataset load_configured_dataset(const Settings& s) {
  const auto p = resolve_data_paths(s);
  return load_dataset(p.train, p.valid, p.test);
}

DpConfig dp_config(const Settings& s) {
  DpConfig c;
  c.iterations = checked_int(s, "hif.T");
  c.alpha = s.get_double("hif.alpha");
  c.semiring = parse_semiring(s.get("hif.semiring"));
  c.include_identity_each_step = s.get_bool("hif.identity_each_step");
  c.validate();
  return c;
}

SqueezeSettings squeeze_settings(const Settings& s, std::size_t num_relations) {
  SqueezeSettings q;
  q.embedding_dim = s.get_size("dim");
  q.num_relations = num_relations;
  q.seed = static_cast<std::uint64_t>(s.get_int("seed"));
  q.lr = s.get_double("squeeze.lr");
  q.max_iters = checked_int(s, "squeeze.max_iters");
  q.target_loss = s.get_double("squeeze.target");
  q.validate();
  return q;
}

TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  c.model = parse_model(s.get("model"));
  c.norm_p = checked_int(s, "norm_p");
  c.margin = s.get_double("margin");
  c.lr = s.get_double("lr");
  c.batch_size = s.get_size("batch_size");
  c.epochs = s.get_size("epochs");
  c.negatives_per_positive = s.get_size("negatives");
  c.seed = static_cast<std::uint64_t>(s.get_int("seed"));
  c.entity_dim = s.get_size("dim");
  const auto rd = s.get_size("relation_dim");
  c.relation_dim = rd == 0 ? c.entity_dim : rd;
  c.eval_every = s.get_size("eval_every");
  c.patience = s.get_size("patience");
  c.restore_best = s.get_bool("restore_best");
  c.validate();
  return c;
}

TrainConfig bootstrap_config(const Settings& s) {
  TrainConfig c = default_bootstrap_config(train_config(s));
  c.epochs = s.get_size("bootstrap.epochs");
  c.plateau_window = s.get_size("bootstrap.plateau_window");
  c.plateau_tolerance = s.get_double("bootstrap.plateau_tolerance");
  if (const double lr = s.get_double("bootstrap.lr"); lr > 0.0) c.lr = lr;
  c.validate();
  return c;
}

std::uint64_t run_hash(const Settings& s) {
  Settings copy = s;
  copy.set("out", "");
  copy.set("jobs", "0");
  return copy.hash();
}

Matrix squeezed_entities(const SqueezeTransform& transform, const HifMatrix& hif) {
  Matrix m = apply_squeeze(transform.matrix, hif);
  project_rows_to_unit_ball(m);
  return m;
}

PipelineResult run_pipeline(const Settings& input, const PipelineOptions& options) {
  Settings settings = input;
  const auto paths = resolve_data_paths(settings);
  settings.set("train", paths.train.string());
  settings.set("valid", paths.valid.string());
  settings.set("test", paths.test.string());
  settings.set("data", "");

  PipelineResult result;
  result.out_dir = settings.get("out");
  result.config_hash = run_hash(settings);
  const std::size_t jobs = settings.get_size("jobs");
  const auto dp = dp_config(settings);
  const auto main_cfg = train_config(settings);
  const auto boot_cfg = bootstrap_config(settings);
  const bool baseline = settings.get_bool("baseline");
  const fs::path dir = result.out_dir;
  fs::create_directories(dir);

  const fs::path manifest_path = dir / "manifest.json";
  if (options.resume && fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    const auto old = json::parse(in, nullptr, false);
    if (old.is_discarded() || old.value("config_hash", std::string()) !=
                                  fmt::format("{:016x}", result.config_hash)) {
      throw ConfigError("cannot resume: " + dir.string() + " holds a different configuration");
    }
  }
  {
    std::ofstream cfg(dir / "config.txt");
    cfg << settings.to_text();
  }

  const Dataset ds = load_dataset(paths.train, paths.valid, paths.test);
  if (ds.test.empty()) throw ConfigError("pipeline needs a non-empty test split");
  const TripleSet filter = make_filter(ds);
  StageRunner stage(dir, options.resume, options, result.stages);

  const HifMatrix hif = stage.run<HifMatrix>(
      "build-hif", "hif.bin",
      [&](const fs::path& p) {
        auto m = build_hif_entity(ds.graph, dp, jobs);
        save_hif(p, m);
        return m;
      },
      [](const fs::path& p) { return load_hif(p); });

  const SqueezeTransform transform = stage.run<SqueezeTransform>(
      "squeeze", "squeeze.bin",
      [&](const fs::path& p) {
        auto t = optimize_transform(squeeze_settings(settings, ds.num_relations()));
        save_squeeze(p, t);
        return t;
      },
      [](const fs::path& p) { return load_squeeze(p); });
  result.squeeze_loss = transform.final_mcs_loss;
  const Matrix entities = squeezed_entities(transform, hif);

  const HifRelationResult relations = stage.run<HifRelationResult>(
      "hif-relation", "hif_relation.bin",
      [&](const fs::path& p) {
        auto r = build_hif_relation(ds, entities, boot_cfg, TrainHooks{{}, nullptr, {}, jobs});
        save_hif_relation(p, r);
        write_training_log(dir / "hif_relation_log.csv", r.log);
        return r;
      },
      [](const fs::path& p) { return load_hif_relation(p); });

  struct Arm {
    std::string label;
    InitMode init;
  };
  std::vector<Arm> arms{{"hif", InitMode::kHif}};
  if (baseline) arms.push_back({"random", InitMode::kRandom});

  for (const auto& arm : arms) {
    TrainConfig cfg = main_cfg;
    cfg.init = arm.init;
    const std::string suffix = arm.label == "hif" ? "" : "-" + arm.label;
    TrainHooks hooks{ds.valid, &filter, {}, jobs};
    if (options.log) {
      hooks.on_epoch = [&](const EpochRecord& r, const EmbeddingSet&) {
        if (r.validation) {
          options.log(fmt::format("  [{}] epoch {} loss {:.4f} valid MRR {:.4f} H@10 {:.3f}",
                                  arm.label, r.epoch, r.loss, r.validation->mrr,
                                  r.validation->hits10));
        }
      };
    }
    ArmResult out;
    out.label = arm.label;
    const fs::path log_path = dir / ("log_" + arm.label + ".csv");
    EmbeddingSet trained = stage.run<EmbeddingSet>(
        "train" + suffix, "model_" + arm.label + ".bin",
        [&](const fs::path& p) {
          const InitSources src{&entities, &relations.embeddings, nullptr};
          auto init = init_embeddings(cfg, ds.num_entities(), ds.num_relations(), src);
          auto r = train(ds, cfg, std::move(init), hooks);
          save_checkpoint(p, r.embeddings, {r.log.best_epoch, result.config_hash, false});
          write_training_log(log_path, r.log);
          out.log = std::move(r.log);
          return std::move(r.embeddings);
        },
        [&](const fs::path& p) {
          if (fs::exists(log_path)) out.log = read_training_log(log_path);
          return load_checkpoint(p);
        });
    stage.run<int>(
        "evaluate" + suffix, "",
        [&](const fs::path&) {
          out.test = evaluate(trained, ds.test, filter, jobs);
          if (!ds.valid.empty()) {
            const auto v = evaluate(trained, ds.valid, filter, jobs);
            out.final_validation = ValidationMetrics{v.mr, v.mrr, v.hits.at(1), v.hits.at(3), v.hits.at(10)};
          }
          return 0;
        },
        [](const fs::path&) { return 0; });
    out.hits10_converged_epoch = hits10_convergence(out.log);
    result.arms.push_back(std::move(out));
  }

  std::vector<std::pair<std::string, RankingReport>> rows;
  for (const auto& a : result.arms) rows.emplace_back(a.label, a.test);
  {
    std::ofstream report(dir / "report.txt");
    report << format_report_table(rows);
  }
  write_report_csv(dir / "report.csv", rows);

  std::vector<std::pair<std::string, std::vector<CurvePoint>>> curves;
  for (const auto& a : result.arms) {
    if (!a.hits10_converged_epoch) continue;
    curves.emplace_back(a.label + "_hits10", convergence_curve(a.log, CurveMetric::kHits10));
    curves.emplace_back(a.label + "_mr", convergence_curve(a.log, CurveMetric::kMR));
  }
  if (!curves.empty()) write_curves_csv(dir / "curves.csv", curves);

  json manifest;
  manifest["format"] = "kghait-run";
  manifest["version"] = 1;
  manifest["config_hash"] = fmt::format("{:016x}", result.config_hash);
  json cfg = json::object();
  for (const auto& [k, v] : settings.values()) cfg[k] = v;
  manifest["config"] = cfg;
  manifest["stage_order"] = kStageOrder;
  json stages = json::array();
  for (const auto& s : result.stages) {
    stages.push_back({{"name", s.name}, {"seconds", s.seconds}, {"artifact", s.artifact},
                      {"resumed", s.resumed}});
  }
  manifest["stages"] = stages;
  manifest["dataset"] = {{"entities", ds.num_entities()},
                         {"relations", ds.num_relations()},
                         {"train", ds.train.size()},
                         {"valid", ds.valid.size()},
                         {"test", ds.test.size()}};
  manifest["squeeze"] = {{"initial_mcs_loss", transform.initial_mcs_loss},
                         {"final_mcs_loss", transform.final_mcs_loss},
                         {"reached_target", transform.reached_target}};
  manifest["hif_relation"] = {{"epochs", relations.epochs}, {"final_loss", relations.final_loss}};
  json arms_json = json::object();
  for (const auto& a : result.arms) {
    json j{{"test", metrics_json(a.test)}};
    if (a.final_validation) j["valid"] = metrics_json(*a.final_validation);
    if (a.hits10_converged_epoch) j["hits10_within_5pct_epoch"] = *a.hits10_converged_epoch;
    j["epochs_run"] = a.log.epochs.size();
    j["best_epoch"] = a.log.best_epoch;
    j["sampler_warnings"] = a.log.sampler_warnings;
    arms_json[a.label] = j;
  }
  manifest["arms"] = arms_json;
  std::ofstream(manifest_path) << manifest.dump(2) << '\n';
  return result;
}

GridResult run_grid(const Settings& settings, const PipelineOptions& options) {
  if (load_configured_dataset(settings).valid.empty()) {
    throw ConfigError("grid search selects by validation MRR and needs a validation split");
  }
  GridResult grid;
  std::vector<Settings> cells;
  const fs::path root = fs::path(settings.get("out")) / "grid";
  for (const auto& p : settings.get_list("grid.norm_p")) {
    for (const auto& t : settings.get_list("grid.T")) {
      for (const auto& lr : settings.get_list("grid.lr")) {
        Settings cell = settings;
        cell.set("norm_p", p);
        cell.set("hif.T", t);
        cell.set("lr", lr);
        cell.set("baseline", "false");
        GridCell gc;
        gc.norm_p = checked_int(cell, "norm_p");
        gc.iterations = checked_int(cell, "hif.T");
        gc.lr = cell.get_double("lr");
        gc.dir = root / fmt::format("p{}_T{}_lr{}", p, t, lr);
        cell.set("out", gc.dir.string());
        grid.cells.push_back(gc);
        cells.push_back(std::move(cell));
      }
    }
  }
  if (grid.cells.empty()) throw ConfigError("grid is empty");

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (options.log) options.log("grid cell " + grid.cells[i].dir.filename().string());
    const auto r = run_pipeline(cells[i], options);
    grid.cells[i].valid_mrr = r.arms.front().final_validation->mrr;
  }
  for (std::size_t i = 1; i < grid.cells.size(); ++i) {
    if (grid.cells[i].valid_mrr > grid.cells[grid.best].valid_mrr) grid.best = i;
  }

  std::ofstream csv(root / "grid.csv");
  csv << "norm_p,T,lr,valid_mrr,dir\n";
  for (const auto& c : grid.cells) {
    csv << fmt::format("{},{},{},{:.6f},{}\n", c.norm_p, c.iterations, c.lr, c.valid_mrr,
                       c.dir.string());
  }
  const auto& best = grid.cells[grid.best];
  json sel{{"selected_by", "valid_mrr"},
           {"norm_p", best.norm_p},
           {"T", best.iterations},
           {"lr", best.lr},
           {"valid_mrr", best.valid_mrr},
           {"dir", best.dir.string()}};
  std::ofstream(root / "selection.json") << sel.dump(2) << '\n';
  return grid;
}

}  // namespace kghait
