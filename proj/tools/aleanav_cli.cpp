// Command-line front end: simulate, train-head, run-filter, evaluate, report.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aleanav/error.hpp"
#include "aleanav/pipeline.hpp"

using namespace aleanav;
using nlohmann::json;

namespace {

constexpr const char* kConfigEnv = "ALEANAV_CONFIG";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string mode = "fixed";
  std::optional<std::size_t> seeds;
  std::optional<unsigned> threads;
};

RunConfig load_config(const Options& o) {
  std::string path = o.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.seeds) cfg.eval.seeds = *o.seeds;
  if (o.threads) cfg.eval.threads = *o.threads;
  return cfg;
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

int cmd_simulate(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path dir = cfg.dataset_dir;
  guard_outputs({dir / "imu.csv", dir / "meas.csv", dir / "truth.csv", dir / "layout.json", dir / "spec.json"},
                o.force);
  const Dataset ds = simulate_from_config(cfg);
  save_dataset(ds, dir);

  const std::size_t frames = ds.frame_times().size();
  const std::size_t possible = frames * ds.layout.objects.size();
  const double occluded = possible ? 1.0 - static_cast<double>(ds.measurements.size()) / static_cast<double>(possible) : 0.0;
  std::printf("dataset    %s\n", dir.string().c_str());
  std::printf("duration   %.3f s\n", ds.spec.duration);
  std::printf("imu rows   %zu\n", ds.imu.size());
  std::printf("frames     %zu\n", frames);
  std::printf("measured   %zu\n", ds.measurements.size());
  std::printf("occluded   %.4f\n", occluded);
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path report_dir = cfg.head_file.parent_path();
  const fs::path calib = report_dir / "calibration.csv";
  const fs::path train_log = report_dir / "training.json";
  guard_outputs({cfg.head_file, calib, train_log}, o.force);

  const TrainOutcome out = train_from_config(cfg);
  write_text(cfg.head_file, out.bundle.to_json());
  write_text(calib, out.validation.to_csv());
  write_json(train_log, {{"initial_loss", out.report.initial_loss},
                         {"final_loss", out.report.final_loss},
                         {"epoch_losses", out.report.epoch_losses},
                         {"train_samples", out.train_samples},
                         {"validation_samples", out.validation_samples},
                         {"aor_max_trace_trans", out.bundle.aor_max_trace_trans},
                         {"aor_max_trace_rot", out.bundle.aor_max_trace_rot}});

  std::printf("head       %s\n", cfg.head_file.string().c_str());
  std::printf("samples    %zu train / %zu validation\n", out.train_samples, out.validation_samples);
  std::printf("loss       %.6f -> %.6f\n", out.report.initial_loss, out.report.final_loss);
  std::printf("PICP@0.95 ");
  for (int c = 0; c < 6; ++c) std::printf(" %s=%.4f", kComponentNames[static_cast<std::size_t>(c)], out.validation.at(0.95, c));
  std::printf("\n");
  return 0;
}

std::optional<HeadBundle> head_if_needed(const RunConfig& cfg, FilterMode mode) {
  if (!uses_head(mode)) return std::nullopt;
  return HeadBundle::load(cfg.head_file);
}

int cmd_run_filter(const Options& o) {
  const RunConfig cfg = load_config(o);
  const FilterMode mode = parse_filter_mode(o.mode);
  const std::string tag(to_string(mode));
  const fs::path traj = cfg.output_dir / ("trajectory_" + tag + ".csv");
  const fs::path log = cfg.output_dir / ("measurements_" + tag + ".csv");
  const fs::path metrics = cfg.output_dir / ("metrics_" + tag + ".json");
  guard_outputs({traj, log, metrics}, o.force);

  const Dataset ds = load_dataset(cfg.dataset_dir);
  const auto bundle = head_if_needed(cfg, mode);
  const EstimatorConfig ec = estimator_for_mode(cfg, mode, bundle ? &*bundle : nullptr);
  const TrajectoryResult res = run(ds, ec, bundle ? &bundle->head : nullptr);
  const MetricsReport m = compute_metrics(res, ds.truth, ds.spec.imu_rate);
  save_trajectory(res, traj);
  save_measurement_log(res, log);
  write_text(metrics, m.to_json() + "\n");
  std::printf("%s: RMSE %.4f m, %.3f deg, max PE %.4f m, switches %d, AOR %d\n", tag.c_str(), m.rmse_position,
              m.rmse_orientation_deg, m.max_position_error, m.anchor_switches, m.aor_rejections);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path out = cfg.output_dir;
  std::vector<fs::path> files = {out / "comparison.csv", out / "comparison.txt", out / "runs.csv"};
  for (FilterMode m : cfg.eval.modes) {
    const std::string tag(to_string(m));
    files.push_back(out / ("error_vs_time_" + tag + ".csv"));
    files.push_back(out / ("distance_vs_sigma_" + tag + ".csv"));
    files.push_back(out / ("eval_metrics_" + tag + ".json"));
  }
  guard_outputs(files, o.force);

  bool need_head = false;
  for (FilterMode m : cfg.eval.modes) need_head = need_head || uses_head(m);
  std::optional<HeadBundle> bundle;
  if (need_head) bundle = HeadBundle::load(cfg.head_file);
  const UncertaintyHead* head = bundle ? &bundle->head : nullptr;
  const HeadBundle* b = bundle ? &*bundle : nullptr;

  const Dataset ds = fs::exists(cfg.dataset_dir / "spec.json") ? load_dataset(cfg.dataset_dir) : simulate_from_config(cfg);

  // Monte Carlo comparison. AOR thresholds come from the head unless configured.
  const auto scenarios = eval_scenarios(cfg);
  EstimatorConfig base = cfg.estimator;
  if (std::find(cfg.eval.modes.begin(), cfg.eval.modes.end(), FilterMode::AleatoricAor) != cfg.eval.modes.end()) {
    base.gating = estimator_for_mode(cfg, FilterMode::AleatoricAor, b).gating;
  }
  const ComparisonTable table =
      compare_modes(scenarios, cfg.eval.modes, cfg.eval.seeds, cfg.seed, base, head, cfg.eval.threads);
  write_text(out / "comparison.csv", table.to_csv());
  write_text(out / "comparison.txt", table.to_text());
  {
    std::string runs = "scenario,seed_index,seed,mode,rmse_position,rmse_orientation_deg,max_position_error,mean_nees,"
                       "anchor_switches,aor_rejections,gate_rejections\n";
    for (const auto& r : table.runs) {
      runs += scenarios[r.scenario].name + ',' + std::to_string(r.seed_index) + ',' + std::to_string(r.seed) + ',' +
              std::string(to_string(r.mode)) + ',' + format_double(r.metrics.rmse_position) + ',' +
              format_double(r.metrics.rmse_orientation_deg) + ',' + format_double(r.metrics.max_position_error) +
              ',' + format_double(r.metrics.mean_nees) + ',' + std::to_string(r.metrics.anchor_switches) + ',' +
              std::to_string(r.metrics.aor_rejections) + ',' + std::to_string(r.metrics.gate_rejections) + '\n';
    }
    write_text(out / "runs.csv", runs);
  }

  // Plot data on the configured dataset.
  for (FilterMode m : cfg.eval.modes) {
    const std::string tag(to_string(m));
    const TrajectoryResult res = run(ds, estimator_for_mode(cfg, m, b), uses_head(m) ? head : nullptr);
    save_error_series(res, ds.truth, ds.spec.imu_rate, out / ("error_vs_time_" + tag + ".csv"));
    save_measurement_log(res, out / ("distance_vs_sigma_" + tag + ".csv"));
    write_text(out / ("eval_metrics_" + tag + ".json"), compute_metrics(res, ds.truth, ds.spec.imu_rate).to_json() + "\n");
  }
  std::cout << table.to_text();
  return 0;
}

int cmd_report(const Options& o) {
  const RunConfig cfg = load_config(o);
  const fs::path cmp = cfg.output_dir / "comparison.txt";
  if (!fs::exists(cmp)) throw Error(ErrorCode::Io, "no comparison in " + cfg.output_dir.string() + " (run evaluate)");
  std::cout << read_text(cmp);
  const fs::path calib = cfg.head_file.parent_path() / "calibration.csv";
  if (fs::exists(calib)) std::cout << "\ncalibration (held out)\n" << read_text(calib);
  for (FilterMode m : cfg.eval.modes) {
    // run-filter output first, then the copy written by evaluate
    fs::path f = cfg.output_dir / ("metrics_" + std::string(to_string(m)) + ".json");
    if (!fs::exists(f)) f = cfg.output_dir / ("eval_metrics_" + std::string(to_string(m)) + ".json");
    if (!fs::exists(f)) continue;
    const json j = json::parse(read_text(f));
    std::printf("\n%-20s RMSE %.4f m  %.3f deg  max PE %.4f m  NEES %.2f  switches %d\n",
                std::string(to_string(m)).c_str(), j["rmse_position_m"].get<double>(),
                j["rmse_orientation_deg"].get<double>(), j["max_position_error_m"].get<double>(),
                j["mean_nees"].get<double>(), j["anchor_switches"].get<int>());
  }
  return 0;
}

int print_config(const Options& o) {
  std::cout << load_config(o).to_json().dump(2) << '\n';
  return 0;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-relative visual-inertial navigation with learned aleatoric uncertainty"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, std::string("JSON run config (default: $") + kConfigEnv + ")");
  app.add_option("--seed", o.seed, "Override the global seed");
  app.add_flag("-f,--force", o.force, "Overwrite existing outputs");

  auto* sim = app.add_subcommand("simulate", "Simulate a dataset directory");
  auto* train = app.add_subcommand("train-head", "Train the uncertainty head and report calibration");
  auto* runf = app.add_subcommand("run-filter", "Run the filter on the dataset");
  runf->add_option("-m,--mode", o.mode, "fixed | aleatoric | aleatoric+switching | aleatoric+aor");
  auto* eval = app.add_subcommand("evaluate", "Compare filter modes over seeds and export plot data");
  eval->add_option("--seeds", o.seeds, "Monte Carlo seeds");
  eval->add_option("--threads", o.threads, "Worker threads");
  auto* report = app.add_subcommand("report", "Print the stored evaluation results");
  auto* show = app.add_subcommand("config", "Print the effective config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*train) return cmd_train(o);
    if (*runf) return cmd_run_filter(o);
    if (*eval) return cmd_evaluate(o);
    if (*report) return cmd_report(o);
    if (*show) return print_config(o);
  } catch (const Error& e) {
    report_error(std::string(to_string(e.code())), e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return 3;
  }
  return 1;
}
