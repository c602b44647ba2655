#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>

#include "json.hpp"
#include "kghait/curves.hpp"
#include "kghait/error.hpp"
#include "kghait/eval.hpp"
#include "kghait/hif.hpp"
#include "kghait/hif_relation.hpp"
#include "kghait/parallel.hpp"
#include "kghait/pipeline.hpp"
#include "kghait/similarity.hpp"
#include "kghait/squeeze.hpp"
#include "kghait/train.hpp"

using namespace kghait;
namespace fs = std::filesystem;

namespace {

// Flag values destined for Settings keys, applied after the config file.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;

  void bind(CLI::App* app, const std::string& flag, const std::string& key,
            const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values.emplace_back(key, v); }, help);
  }
  void bind_flag(CLI::App* app, const std::string& flag, const std::string& key,
                 const std::string& help) {
    app->add_flag_function(
        flag, [this, key](std::int64_t) { values.emplace_back(key, "true"); }, help);
  }
};

struct Globals {
  std::string config;
  // Configuration recorded in a run manifest; layered like a config file.
  std::vector<std::pair<std::string, std::string>> recorded;
  std::vector<std::string> sets;
  std::size_t jobs = 0;
  bool jobs_given = false;
};

Settings resolve(const Globals& g, const Overrides& o) {
  Settings s = Settings::defaults();
  if (!g.config.empty()) s.merge_file(g.config);
  for (const auto& [k, v] : g.recorded) s.set(k, v);
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    s.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : o.values) s.set(k, v);
  if (g.jobs_given) s.set("jobs", std::to_string(g.jobs));
  default_jobs() = s.get_size("jobs");
  return s;
}

void add_data_flags(CLI::App* app, Overrides& o) {
  o.bind(app, "--data", "data",
         "directory with train.txt/valid.txt/test.txt (relative names also tried under $KGHAIT_DATA_DIR)");
  o.bind(app, "--train", "train", "training triples (TSV head, relation, tail)");
  o.bind(app, "--valid", "valid", "validation triples");
  o.bind(app, "--test", "test", "test triples");
}

void add_hif_flags(CLI::App* app, Overrides& o) {
  o.bind(app, "--T", "hif.T", "DP iterations (>= 1)");
  o.bind(app, "--alpha", "hif.alpha", "decay weight in (0, 1]");
  o.bind(app, "--semiring", "hif.semiring", "concrete-max-decay | sum-product | max-product");
  o.bind(app, "--identity-each-step", "hif.identity_each_step",
         "seed both sides with e(u) every iteration (true/false)");
}

void add_model_flags(CLI::App* app, Overrides& o) {
  o.bind(app, "--model", "model", "transe | transh | transr");
  o.bind(app, "--norm-p", "norm_p", "distance norm, 1 or 2");
  o.bind(app, "--margin", "margin", "hinge margin");
  o.bind(app, "--lr", "lr", "Adam learning rate");
  o.bind(app, "--batch-size", "batch_size", "positives per batch");
  o.bind(app, "--epochs", "epochs", "training epochs");
  o.bind(app, "--negatives", "negatives", "corruptions per positive");
  o.bind(app, "--dim", "dim", "entity embedding dimension d_e");
  o.bind(app, "--relation-dim", "relation_dim", "relation dimension d_r (0 = d_e)");
  o.bind(app, "--eval-every", "eval_every", "validate every N epochs (0 = never)");
  o.bind(app, "--patience", "patience", "evaluations without MRR gain before stopping");
  o.bind(app, "--seed", "seed", "global seed");
}

void print_report(const RankingReport& r, const std::string& label) {
  std::cout << format_report_table({{label, r}});
}

Matrix load_squeezed(const std::string& hif_path, const std::string& squeeze_path) {
  if (hif_path.empty() || squeeze_path.empty()) {
    throw ConfigError("--hif and --squeeze are both required");
  }
  return squeezed_entities(load_squeeze(squeeze_path), load_hif(hif_path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HIF-initialized knowledge graph embedding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value config file (command-line flags win)");
  app.add_option("--set", g.sets, "override any config key: --set key=value")->take_all();
  app.add_option_function<std::size_t>(
      "--jobs", [&](std::size_t j) { g.jobs = j; g.jobs_given = true; },
      "worker threads (0 = all cores)");
  Overrides o;

  // build-hif
  auto* build = app.add_subcommand("build-hif", "compute HIF-entity vectors");
  add_data_flags(build, o);
  add_hif_flags(build, o);
  std::string out_path, csv_path;
  build->add_option("--out", out_path, "HIF artifact")->required();
  build->add_option("--csv", csv_path, "also write the matrix as CSV");

  // squeeze
  auto* squeeze = app.add_subcommand("squeeze", "learn the d_e x |R| projection");
  std::string hif_path;
  std::size_t num_relations = 0;
  squeeze->add_option("--hif", hif_path, "HIF artifact (gives |R| and the distortion report)");
  squeeze->add_option("--relations", num_relations, "|R| when no HIF artifact is given");
  o.bind(squeeze, "--dim", "dim", "target dimension d_e");
  o.bind(squeeze, "--seed", "seed", "seed");
  o.bind(squeeze, "--lr", "squeeze.lr", "step size");
  o.bind(squeeze, "--max-iters", "squeeze.max_iters", "iteration cap");
  o.bind(squeeze, "--target", "squeeze.target", "target mutual coherence");
  squeeze->add_option("--out", out_path, "transform artifact")->required();

  // bootstrap-relations
  auto* boot = app.add_subcommand("bootstrap-relations",
                                  "train relation embeddings against frozen HIF-entity rows");
  std::string squeeze_path;
  add_data_flags(boot, o);
  add_model_flags(boot, o);
  boot->add_option("--hif", hif_path, "HIF artifact")->required();
  boot->add_option("--squeeze", squeeze_path, "squeeze transform artifact")->required();
  o.bind(boot, "--bootstrap-epochs", "bootstrap.epochs", "maximum bootstrap epochs");
  boot->add_option("--out", out_path, "bootstrap checkpoint")->required();

  // train
  auto* trn = app.add_subcommand("train", "train a translational model");
  std::string init_name = "random", relations_path, inherit_path, log_path;
  add_data_flags(trn, o);
  add_model_flags(trn, o);
  trn->add_option("--init", init_name, "random | hif");
  trn->add_option("--hif", hif_path, "HIF artifact (init=hif)");
  trn->add_option("--squeeze", squeeze_path, "squeeze transform (init=hif)");
  trn->add_option("--relations", relations_path, "bootstrap checkpoint (init=hif)");
  trn->add_option("--inherit", inherit_path, "TransE checkpoint to start a TransR run from");
  trn->add_option("--out", out_path, "model checkpoint")->required();
  trn->add_option("--log", log_path, "training log CSV");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "filtered link-prediction metrics");
  std::string checkpoint, split = "test", ranks_path;
  add_data_flags(ev, o);
  ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ev->add_option("--split", split, "test | valid")->check(CLI::IsMember({"test", "valid"}));
  ev->add_option("--csv", csv_path, "metrics CSV");
  ev->add_option("--ranks", ranks_path, "per-triple ranks CSV");

  // similarity
  auto* sim = app.add_subcommand("similarity", "cosine confusion matrix for entity groups");
  std::string groups_path, aliases_path;
  add_data_flags(sim, o);
  sim->add_option("--hif", hif_path, "HIF artifact");
  sim->add_option("--checkpoint", checkpoint, "use a model's entity embeddings instead");
  sim->add_option("--groups", groups_path, "TSV: group, entity name")->required();
  sim->add_option("--aliases", aliases_path, "TSV: vocabulary name, display name");
  sim->add_option("--out", out_path, "matrix CSV");

  // curves
  auto* cur = app.add_subcommand("curves", "convergence curves from training logs");
  std::vector<std::string> logs;
  std::string metric = "hits10";
  std::size_t every = 0;
  cur->add_option("--log", logs, "label=path of a training log CSV")->required();
  cur->add_option("--metric", metric, "hits10 | mr | mrr");
  cur->add_option("--every", every, "keep epochs divisible by N");
  cur->add_option("--out", out_path, "curves CSV");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "build-hif, squeeze, hif-relation, train, evaluate");
  bool resume = false, grid = false;
  std::string manifest_path;
  add_data_flags(pipe, o);
  add_hif_flags(pipe, o);
  add_model_flags(pipe, o);
  o.bind(pipe, "--out", "out", "run directory");
  o.bind_flag(pipe, "--baseline", "baseline", "also train a random-init arm");
  pipe->add_flag("--grid", grid, "grid search over grid.norm_p x grid.T x grid.lr");
  pipe->add_flag("--resume", resume, "reuse artifacts already in the run directory");
  pipe->add_option("--manifest", manifest_path, "re-run the configuration recorded in a manifest");

  // split
  auto* spl = app.add_subcommand("split", "seeded train/valid/test split of one triple file");
  std::string triples_path;
  double train_frac = 0.8;
  std::optional<double> valid_frac;
  std::uint64_t seed = 0;
  spl->add_option("--triples", triples_path, "input triples")->required();
  spl->add_option("--train-frac", train_frac, "training share");
  spl->add_option("--valid-frac", valid_frac, "validation share (default: half the rest)");
  spl->add_option("--seed", seed, "shuffle seed");
  spl->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (pipe->parsed() && !manifest_path.empty()) {
      std::ifstream in(manifest_path);
      if (!in) throw ConfigError("cannot open manifest: " + manifest_path);
      const auto m = nlohmann::json::parse(in);
      for (const auto& [k, v] : m.at("config").items()) g.recorded.emplace_back(k, v.get<std::string>());
    }
    const Settings s = resolve(g, o);
    const std::size_t jobs = s.get_size("jobs");

    if (build->parsed()) {
      const auto ds = load_configured_dataset(s);
      const auto dp = dp_config(s);
      const auto hif = build_hif_entity(ds.graph, dp, jobs);
      save_hif(out_path, hif);
      if (!csv_path.empty()) export_hif_csv(csv_path, hif, ds.vocab().entities);
      std::cout << fmt::format("HIF-entity: {} entities x {} relations, T={}, alpha={}, {}\n",
                               hif.num_entities(), hif.dim(), hif.iterations_used, hif.alpha,
                               to_string(hif.semiring));
    } else if (squeeze->parsed()) {
      std::optional<HifMatrix> hif;
      if (!hif_path.empty()) {
        hif = load_hif(hif_path);
        num_relations = hif->dim();
      }
      if (num_relations == 0) throw ConfigError("give --hif or --relations");
      const auto settings = squeeze_settings(s, num_relations);
      const auto t = optimize_transform(settings);
      save_squeeze(out_path, t);
      std::cout << fmt::format(
          "squeeze {}x{}: mcs loss {:.4f} -> {:.4f} (Welch bound {:.4f}) in {} iterations{}\n",
          t.matrix.rows(), t.matrix.cols(), t.initial_mcs_loss, t.final_mcs_loss,
          welch_bound(num_relations, settings.embedding_dim), t.iterations,
          t.reached_target ? "" : ", target not reached");
      if (hif) {
        const auto random = random_transform(settings.embedding_dim, num_relations, settings.seed);
        std::cout << fmt::format("median cosine distortion: optimized {:.4f}, random {:.4f}\n",
                                 median_cosine_distortion(t.matrix, *hif, 1000, settings.seed),
                                 median_cosine_distortion(random, *hif, 1000, settings.seed));
      }
    } else if (boot->parsed()) {
      const auto ds = load_configured_dataset(s);
      const Matrix entities = load_squeezed(hif_path, squeeze_path);
      const auto r = build_hif_relation(ds, entities, bootstrap_config(s), TrainHooks{{}, nullptr, {}, jobs});
      save_hif_relation(out_path, r);
      std::cout << fmt::format("bootstrap: {} epochs, final loss {:.6f}\n", r.epochs, r.final_loss);
    } else if (trn->parsed()) {
      const auto ds = load_configured_dataset(s);
      TrainConfig cfg = train_config(s);
      cfg.init = parse_init(init_name);
      InitSources src;
      std::optional<Matrix> entities;
      std::optional<HifRelationResult> relations;
      std::optional<EmbeddingSet> inherited;
      if (cfg.init == InitMode::kHif) {
        entities = load_squeezed(hif_path, squeeze_path);
        if (relations_path.empty()) throw ConfigError("init=hif needs --relations");
        relations = load_hif_relation(relations_path);
        src.hif_entities = &*entities;
        src.hif_relations = &relations->embeddings;
      }
      if (!inherit_path.empty()) {
        inherited = load_checkpoint(inherit_path);
        src.inherit_from = &*inherited;
      }
      const TripleSet filter = make_filter(ds);
      TrainHooks hooks{ds.valid, &filter, {}, jobs};
      hooks.on_epoch = [](const EpochRecord& r, const EmbeddingSet&) {
        if (r.validation) {
          std::cerr << fmt::format("epoch {} loss {:.5f} valid MRR {:.4f} H@10 {:.3f}\n", r.epoch,
                                   r.loss, r.validation->mrr, r.validation->hits10);
        }
      };
      auto result = train(ds, cfg, init_embeddings(cfg, ds.num_entities(), ds.num_relations(), src), hooks);
      save_checkpoint(out_path, result.embeddings, {result.log.best_epoch, run_hash(s), false});
      if (!log_path.empty()) write_training_log(log_path, result.log);
      std::cout << fmt::format("trained {} epochs (returned epoch {}), final loss {:.6f}\n",
                               result.log.epochs.size(), result.log.best_epoch,
                               result.log.epochs.back().loss);
      if (result.log.sampler_warnings > 0) {
        std::cerr << "warning: " << result.log.sampler_warnings
                  << " negatives could not avoid train triples\n";
      }
    } else if (ev->parsed()) {
      const auto ds = load_configured_dataset(s);
      const auto emb = load_checkpoint(checkpoint);
      const auto& triples = split == "test" ? ds.test : ds.valid;
      const auto rep = evaluate(emb, triples, make_filter(ds), jobs);
      print_report(rep, std::string(to_string(emb.model)));
      if (!csv_path.empty()) write_report_csv(csv_path, {{std::string(to_string(emb.model)), rep}});
      if (!ranks_path.empty()) write_ranks_csv(ranks_path, rep, ds.vocab());
    } else if (sim->parsed()) {
      const auto ds = load_configured_dataset(s);
      Matrix vectors;
      if (!checkpoint.empty()) {
        vectors = load_checkpoint(checkpoint).entities;
      } else if (!hif_path.empty()) {
        vectors = load_hif(hif_path).data;
      } else {
        throw ConfigError("give --hif or --checkpoint");
      }
      const auto groups = read_groups(groups_path);
      for (const auto& w : groups.warnings) std::cerr << "warning: " << w << '\n';
      const AliasMap aliases = aliases_path.empty() ? AliasMap{} : read_aliases(aliases_path);
      const auto rep = similarity_report(vectors, groups.groups, ds.vocab().entities, aliases);
      if (!out_path.empty()) write_similarity_csv(out_path, rep);
      std::cout << similarity_summary(rep);
    } else if (cur->parsed()) {
      const auto m = parse_curve_metric(metric);
      std::vector<std::pair<std::string, std::vector<CurvePoint>>> curves;
      for (const auto& spec : logs) {
        const auto eq = spec.find('=');
        const std::string label = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        auto curve = convergence_curve(read_training_log(path), m, every);
        std::cout << fmt::format("{}: within 5% of final {} = {:.4f} at epoch {}\n", label,
                                 to_string(m), curve.back().value, *epochs_to_within(curve));
        curves.emplace_back(label, std::move(curve));
      }
      if (!out_path.empty()) write_curves_csv(out_path, curves);
    } else if (pipe->parsed()) {
      PipelineOptions opts;
      opts.resume = resume;
      opts.log = [](const std::string& line) { std::cerr << line << '\n'; };
      if (grid) {
        const auto r = run_grid(s, opts);
        const auto& best = r.cells[r.best];
        std::cout << fmt::format("best cell: norm_p={} T={} lr={} valid MRR {:.4f} ({})\n",
                                 best.norm_p, best.iterations, best.lr, best.valid_mrr,
                                 best.dir.string());
      } else {
        const auto r = run_pipeline(s, opts);
        std::vector<std::pair<std::string, RankingReport>> rows;
        for (const auto& a : r.arms) rows.emplace_back(a.label, a.test);
        std::cout << format_report_table(rows);
        std::cout << "manifest: " << (r.out_dir / "manifest.json").string() << '\n';
      }
    } else if (spl->parsed()) {
      Vocabularies vocab;
      const auto triples = read_triples(triples_path, vocab);
      const auto ds = split_dataset(triples, vocab, train_frac, valid_frac, seed);
      fs::create_directories(out_path);
      write_triples(fs::path(out_path) / "train.txt", ds.train, ds.vocab());
      write_triples(fs::path(out_path) / "valid.txt", ds.valid, ds.vocab());
      write_triples(fs::path(out_path) / "test.txt", ds.test, ds.vocab());
      std::cout << ds.report.to_text();
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}
