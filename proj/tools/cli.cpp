#include "cli.hpp"

#include "server.hpp"

#include "lfd/errors.hpp"
#include "lfd/io.hpp"
#include "lfd/rng.hpp"
#include "lfd/stats.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

namespace lfd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string in;
  std::vector<std::string> inputs;
  std::string a, b;
  std::string mode = "shared";
  std::string model;
  std::string registered;
  std::string dmps;
  std::string classifier;
  std::string host = "127.0.0.1";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::size_t> freeze;
  unsigned short port = 8765;
  double tick_hz = 50.0;
  bool target = false;
  std::size_t max_connections = 0;
};

PipelineConfig config_of(const Options& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else {
    cfg.train.seed = cfg.seeds.train;
  }
  return cfg;
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

fs::path model_path(const PipelineConfig& cfg, const char* name) { return fs::path(cfg.model_dir) / name; }

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw MissingModelError(std::string(what) + " not found at " + p.string());
}

EpisodeModels load_models(RunMode mode, const PipelineConfig& cfg, const Options& o) {
  EpisodeModels models;
  if (mode == RunMode::Manual) return models;
  const fs::path dp = or_default(o.dmps, model_path(cfg, "dmps.json"));
  require_file(dp, "DMP model");
  models.dmps = dmps_from_json(read_json_file(dp));
  if (mode == RunMode::Shared) {
    const fs::path cp = or_default(o.classifier, model_path(cfg, "classifier.bin"));
    require_file(cp, "classifier");
    models.classifier = load_classifier(cp.string());
  }
  return models;
}

json history_json(const TrainResult& r) {
  json epochs = json::array();
  for (const auto& e : r.history)
    epochs.push_back({{"train_loss", e.train_loss}, {"train_acc", e.train_acc}, {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc}});
  return {{"type", "train_history"}, {"version", 1}, {"best_epoch", r.best_epoch},
          {"train_size", r.train_indices.size()}, {"val_size", r.val_indices.size()}, {"epochs", std::move(epochs)}};
}

int cmd_init_config(const Options& o, std::ostream& out) {
  PipelineConfig cfg;
  cfg.train.seed = cfg.seeds.train;
  const fs::path p = or_default(o.out, "lfd.json");
  save_config(p, cfg);
  out << "wrote " << p.string() << '\n';
  return kExitOk;
}

int cmd_demo_gen(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  DemoGenConfig gen = cfg.demo;
  std::size_t n = cfg.demos;
  std::uint64_t seed = cfg.seeds.demo;
  fs::path dir = cfg.data_dir;
  if (o.target) {
    gen.style = RenderStyle::target();
    n = cfg.target_demos;
    seed = cfg.seeds.target_demo;
    dir = cfg.target_dir;
  }
  if (o.n) n = *o.n;
  if (o.seed) seed = *o.seed;
  if (!o.out.empty()) dir = o.out;
  if (n == 0) throw InvalidArgument("--n must be positive");
  const auto trials = generate_demos(n, cfg.episode, cfg.agent, seed, gen);
  save_trials(dir, trials);
  std::size_t frames = 0, ok = 0;
  std::array<std::size_t, 3> hist{0, 0, 0};
  for (const auto& t : trials) {
    frames += t.frames.size();
    ok += t.success ? 1 : 0;
    for (int l : t.frames.labels) ++hist[static_cast<std::size_t>(l)];
  }
  out << "wrote " << n << " demos to " << dir.string() << " (" << ok << " completed, " << frames << " frames, labels "
      << hist[0] << '/' << hist[1] << '/' << hist[2] << ")\n";
  return kExitOk;
}

int cmd_register(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  const auto demos = load_demos(or_default(o.in, cfg.data_dir));
  std::vector<Trajectory> left, right;
  for (const auto& [l, r] : demos) {
    left.push_back(l);
    right.push_back(r);
  }
  const std::vector<RegisteredDemoSet> sets{register_demos(left), register_demos(right)};
  const fs::path p = or_default(o.out, model_path(cfg, "registered.json"));
  write_json_file(p, registered_to_json(sets));
  out << "registered " << demos.size() << " demos (reference left " << sets[0].reference_index << ", right "
      << sets[1].reference_index << ") -> " << p.string() << '\n';
  return kExitOk;
}

int cmd_gpr_fit(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  const auto sets = registered_from_json(read_json_file(or_default(o.in, model_path(cfg, "registered.json"))));
  const DesiredTrajectory d = fit_desired_trajectory(sets, cfg.gpr);
  const fs::path p = or_default(o.out, model_path(cfg, "desired.json"));
  write_json_file(p, desired_to_json(d));
  out << "fitted desired trajectory on " << d.grid.size() << " grid points -> " << p.string() << '\n';
  return kExitOk;
}

int cmd_dmp_fit(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  const DesiredTrajectory d = desired_from_json(read_json_file(or_default(o.in, model_path(cfg, "desired.json"))));
  const auto sets =
      registered_from_json(read_json_file(or_default(o.registered, model_path(cfg, "registered.json"))));
  const auto dmps = fit_phase_dmps(d, sets, cfg.dmp.params(), cfg.dmp.still_tol);
  const fs::path p = or_default(o.out, model_path(cfg, "dmps.json"));
  write_json_file(p, dmps_to_json(dmps));
  out << "fitted " << dmps.size() << " phase DMPs -> " << p.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  PipelineConfig cfg = config_of(o);
  if (o.seed) cfg.train.seed = *o.seed;
  const Dataset data = load_dataset(or_default(o.in, cfg.data_dir));
  ClassifierArch arch = ClassifierArch::desk();
  arch.input_size = cfg.episode.sim.image_size;
  const TrainResult r = train(make_classifier(arch, cfg.seeds.classifier), data, cfg.train);
  const fs::path p = or_default(o.out, model_path(cfg, "classifier.bin"));
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_classifier(p.string(), r.clf);
  write_json_file(fs::path(p.string() + ".history.json"), history_json(r));
  const auto& best = r.history.at(r.best_epoch);
  out << "trained on " << r.train_indices.size() << " frames, validation accuracy " << best.val_acc << " at epoch "
      << r.best_epoch << " -> " << p.string() << '\n';
  return kExitOk;
}

int cmd_finetune(const Options& o, std::ostream& out) {
  PipelineConfig cfg = config_of(o);
  cfg.train.seed = o.seed ? *o.seed : cfg.seeds.finetune;
  const fs::path mp = or_default(o.model, model_path(cfg, "classifier.bin"));
  require_file(mp, "classifier");
  const Classifier clf = load_classifier(mp.string());
  const Dataset data = load_dataset(or_default(o.in, cfg.target_dir));
  const std::size_t freeze = o.freeze ? *o.freeze : cfg.freeze;
  const TrainResult r = finetune(clf, data, freeze, cfg.train);
  const fs::path p = or_default(o.out, model_path(cfg, "classifier_ft.bin"));
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_classifier(p.string(), r.clf);
  write_json_file(fs::path(p.string() + ".history.json"), history_json(r));
  out << "fine-tuned with " << freeze << " frozen layers, validation accuracy " << r.history.at(r.best_epoch).val_acc
      << " -> " << p.string() << '\n';
  return kExitOk;
}

int cmd_episode(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  const RunMode mode = parse_run_mode(o.mode);
  const EpisodeModels models = load_models(mode, cfg, o);
  const std::uint64_t first = o.seed ? *o.seed : cfg.seeds.episode;
  const std::size_t n = o.n ? *o.n : cfg.episodes;
  if (n == 0) throw InvalidArgument("--n must be positive");
  const fs::path dir = or_default(o.out, cfg.results_dir);
  MetricsFile metrics{std::string(run_mode_name(mode)), {}};
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t seed = first + k;
    const EpisodeLog log = run_episode(mode, models, cfg.episode, cfg.agent, seed);
    save_log(dir / ("episode_" + std::string(run_mode_name(mode)) + "_" + std::to_string(seed) + ".jsonl"), log);
    const Metrics m = compute_metrics(log);
    metrics.runs.push_back({seed, log.success, m});
    out << run_mode_name(mode) << " seed " << seed << (log.success ? " done" : " timeout") << "  M " << m.M << " T "
        << m.T << " A " << m.A << " C " << m.C << '\n';
  }
  const fs::path mp = dir / ("metrics_" + std::string(run_mode_name(mode)) + ".json");
  write_json_file(mp, metrics_to_json(metrics));
  out << "wrote " << mp.string() << '\n';
  return kExitOk;
}

int cmd_metrics(const Options& o, std::ostream& out) {
  if (o.inputs.empty()) throw CLI::ValidationError("--in", "at least one episode log is required");
  MetricsFile metrics;
  for (const auto& p : o.inputs) {
    const EpisodeLog log = load_log(p);
    if (metrics.mode.empty()) metrics.mode = std::string(run_mode_name(log.mode));
    metrics.runs.push_back({log.seed, log.success, compute_metrics(log)});
  }
  const json j = metrics_to_json(metrics);
  if (!o.out.empty()) {
    write_json_file(o.out, j);
    out << "wrote " << o.out << '\n';
  } else {
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const MetricsFile a = metrics_from_json(read_json_file(o.a));
  const MetricsFile b = metrics_from_json(read_json_file(o.b));
  std::vector<const MetricsRun*> ra, rb;
  for (const auto& run : a.runs) {
    const auto it = std::find_if(b.runs.begin(), b.runs.end(), [&](const MetricsRun& x) { return x.seed == run.seed; });
    if (it == b.runs.end()) throw InsufficientDataError("seed " + std::to_string(run.seed) + " missing from " + o.b);
    ra.push_back(&run);
    rb.push_back(&*it);
  }
  json report = {{"type", "comparison"},
                 {"version", 1},
                 {"a", {{"file", o.a}, {"mode", a.mode}}},
                 {"b", {{"file", o.b}, {"mode", b.mode}}},
                 {"pairs", ra.size()}};
  std::ostringstream table;
  table << std::left << std::setw(4) << "" << std::setw(14) << ("median " + a.mode) << std::setw(14)
        << ("median " + b.mode) << std::setw(14) << "wilcoxon p" << "welch p\n";
  for (const char* key : {"M", "T", "A", "C"}) {
    std::vector<double> xa, xb;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const auto pick = [key](const Metrics& m) {
        switch (key[0]) {
          case 'M':
            return m.M;
          case 'T':
            return m.T;
          case 'A':
            return m.A;
          default:
            return static_cast<double>(m.C);
        }
      };
      xa.push_back(pick(ra[i]->metrics));
      xb.push_back(pick(rb[i]->metrics));
    }
    const CompareResult c = stats_compare(xa, xb);
    report["metrics"][key] = {{"median_a", c.median_a},
                              {"median_b", c.median_b},
                              {"mean_a", c.mean_a},
                              {"mean_b", c.mean_b},
                              {"wilcoxon_w", c.wilcoxon.statistic},
                              {"wilcoxon_n", c.wilcoxon.n_used},
                              {"wilcoxon_exact", c.wilcoxon.exact},
                              {"wilcoxon_p", c.wilcoxon.p},
                              {"welch_t", c.welch.t},
                              {"welch_df", c.welch.df},
                              {"welch_p", c.welch.p}};
    table << std::setw(4) << key << std::setw(14) << c.median_a << std::setw(14) << c.median_b << std::setw(14)
          << c.wilcoxon.p << c.welch.p << '\n';
  }
  out << table.str();
  if (!o.out.empty()) {
    write_json_file(o.out, report);
    out << "wrote " << o.out << '\n';
  }
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_of(o);
  ServeOptions so;
  so.host = o.host;
  so.port = o.port;
  so.session.mode = parse_run_mode(o.mode);
  so.session.seed = o.seed ? *o.seed : cfg.seeds.episode;
  so.session.tick_hz = o.tick_hz;
  so.results_dir = or_default(o.out, cfg.results_dir);
  so.max_connections = o.max_connections;
  const EpisodeModels models = load_models(so.session.mode, cfg, o);
  serve(models, cfg.episode, so, out);
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-from-demonstration shared control pipeline", "lfd"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&o](CLI::App* sub) { sub->add_option("--config", o.config, "pipeline config (JSON)"); };

  auto* init = app.add_subcommand("init-config", "write the default config");
  init->add_option("--out", o.out, "output path (default lfd.json)");

  auto* demo = app.add_subcommand("demo-gen", "scripted demonstrations and labelled frames");
  add_config(demo);
  demo->add_option("--n", o.n, "number of trials");
  demo->add_option("--seed", o.seed, "demo seed");
  demo->add_option("--out", o.out, "output directory");
  demo->add_flag("--target", o.target, "render with the perturbed target-domain style");

  auto* reg = app.add_subcommand("register", "ICP and DTW registration of demos");
  add_config(reg);
  reg->add_option("--in", o.in, "demo directory");
  reg->add_option("--out", o.out, "registered demos file");

  auto* gpr = app.add_subcommand("gpr-fit", "desired trajectory by Gaussian process regression");
  add_config(gpr);
  gpr->add_option("--in", o.in, "registered demos file");
  gpr->add_option("--out", o.out, "desired trajectory file");

  auto* dmp = app.add_subcommand("dmp-fit", "per-phase DMPs from the desired trajectory");
  add_config(dmp);
  dmp->add_option("--in", o.in, "desired trajectory file");
  dmp->add_option("--registered", o.registered, "registered demos file");
  dmp->add_option("--out", o.out, "DMP model file");

  auto* tr = app.add_subcommand("train", "train the context classifier");
  add_config(tr);
  tr->add_option("--in", o.in, "frame directory");
  tr->add_option("--seed", o.seed, "training seed");
  tr->add_option("--out", o.out, "classifier file");

  auto* ft = app.add_subcommand("finetune", "fine-tune the classifier on target-domain frames");
  add_config(ft);
  ft->add_option("--in", o.in, "target frame directory");
  ft->add_option("--model", o.model, "source classifier");
  ft->add_option("--freeze", o.freeze, "leading layers held fixed");
  ft->add_option("--seed", o.seed, "training seed");
  ft->add_option("--out", o.out, "fine-tuned classifier file");

  auto* ep = app.add_subcommand("episode", "run scripted-agent episodes");
  add_config(ep);
  ep->add_option("--mode", o.mode, "manual, auto or shared")->check(CLI::IsMember({"manual", "auto", "autonomous", "shared"}));
  ep->add_option("--seed", o.seed, "first episode seed");
  ep->add_option("--n", o.n, "number of episodes");
  ep->add_option("--out", o.out, "results directory");
  ep->add_option("--dmps", o.dmps, "DMP model file");
  ep->add_option("--classifier", o.classifier, "classifier file");

  auto* met = app.add_subcommand("metrics", "recompute metrics from episode logs");
  met->add_option("--in", o.inputs, "episode logs")->required();
  met->add_option("--out", o.out, "metrics file (stdout when omitted)");

  auto* cmp = app.add_subcommand("compare", "paired statistics between two metrics files");
  cmp->add_option("--a", o.a, "first metrics file")->required();
  cmp->add_option("--b", o.b, "second metrics file")->required();
  cmp->add_option("--out", o.out, "report file");

  auto* srv = app.add_subcommand("serve", "WebSocket session server");
  add_config(srv);
  srv->add_option("--mode", o.mode, "manual, auto or shared")->check(CLI::IsMember({"manual", "auto", "autonomous", "shared"}));
  srv->add_option("--port", o.port, "TCP port");
  srv->add_option("--host", o.host, "bind address");
  srv->add_option("--seed", o.seed, "episode seed");
  srv->add_option("--tick-hz", o.tick_hz, "simulation rate")->check(CLI::PositiveNumber);
  srv->add_option("--out", o.out, "directory for completed session logs");
  srv->add_option("--dmps", o.dmps, "DMP model file");
  srv->add_option("--classifier", o.classifier, "classifier file");
  srv->add_option("--max-connections", o.max_connections, "exit after this many sessions (0 = never)");

  if (argc > 1 && argv[1][0] != '-') {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == argv[1]; });
    if (!known) {
      err << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
      return kExitUsage;
    }
  }
  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "init-config") return cmd_init_config(o, out);
    if (name == "demo-gen") return cmd_demo_gen(o, out);
    if (name == "register") return cmd_register(o, out);
    if (name == "gpr-fit") return cmd_gpr_fit(o, out);
    if (name == "dmp-fit") return cmd_dmp_fit(o, out);
    if (name == "train") return cmd_train(o, out);
    if (name == "finetune") return cmd_finetune(o, out);
    if (name == "episode") return cmd_episode(o, out);
    if (name == "metrics") return cmd_metrics(o, out);
    if (name == "compare") return cmd_compare(o, out);
    if (name == "serve") return cmd_serve(o, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << "error: unknown subcommand " << name << '\n';
  return kExitUsage;
}

}  // namespace lfd::cli
