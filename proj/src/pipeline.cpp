#include "aleanav/pipeline.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "aleanav/error.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

using nlohmann::json;

namespace {

std::string scenarios_name(EvalScenarios s) {
  switch (s) {
    case EvalScenarios::Config: return "config";
    case EvalScenarios::MultiObject: return "multi_object";
    case EvalScenarios::GrossOutlier: return "gross_outlier";
  }
  return "config";
}

EvalScenarios parse_scenarios(const std::string& s) {
  if (s == "config") return EvalScenarios::Config;
  if (s == "multi_object") return EvalScenarios::MultiObject;
  if (s == "gross_outlier") return EvalScenarios::GrossOutlier;
  throw Error(ErrorCode::InvalidConfig, "eval.scenarios must be config, multi_object or gross_outlier");
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const char* context) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(context) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw Error(ErrorCode::InvalidConfig, std::string(context) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json RunConfig::to_json() const {
  json modes = json::array();
  for (FilterMode m : eval.modes) modes.push_back(std::string(aleanav::to_string(m)));
  return {{"seed", seed},
          {"paths", {{"dataset", dataset_dir.string()}, {"head", head_file.string()}, {"output", output_dir.string()}}},
          {"trajectory", aleanav::to_json(trajectory)},
          {"layout", aleanav::to_json(layout)},
          {"noise", aleanav::to_json(noise)},
          {"train",
           {{"hidden", train.train.hidden},
            {"learning_rate", train.train.learning_rate},
            {"epochs", train.train.epochs},
            {"batch_size", train.train.batch_size},
            {"lambda_t", train.train.weights.trans},
            {"lambda_r", train.train.weights.rot},
            {"datasets", train.datasets},
            {"validation_fraction", train.validation_fraction},
            {"aor_factor", train.aor_factor}}},
          {"estimator", aleanav::to_json(estimator)},
          {"eval",
           {{"modes", modes},
            {"seeds", eval.seeds},
            {"threads", eval.threads},
            {"scenarios", scenarios_name(eval.scenarios)}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    only_keys(j, {"seed", "paths", "trajectory", "layout", "noise", "train", "estimator", "eval"}, "config");
    get_if(j, "seed", c.seed);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      only_keys(p, {"dataset", "head", "output"}, "paths");
      if (p.contains("dataset")) c.dataset_dir = p.at("dataset").get<std::string>();
      if (p.contains("head")) c.head_file = p.at("head").get<std::string>();
      if (p.contains("output")) c.output_dir = p.at("output").get<std::string>();
    }
    if (j.contains("trajectory")) c.trajectory = trajectory_spec_from_json(j.at("trajectory"));
    if (j.contains("layout")) c.layout = layout_from_json(j.at("layout"));
    if (j.contains("noise")) c.noise = noise_profile_from_json(j.at("noise"));
    if (j.contains("train")) {
      const auto& t = j.at("train");
      only_keys(t,
                {"hidden", "learning_rate", "epochs", "batch_size", "lambda_t", "lambda_r", "datasets",
                 "validation_fraction", "aor_factor"},
                "train");
      get_if(t, "hidden", c.train.train.hidden);
      get_if(t, "learning_rate", c.train.train.learning_rate);
      get_if(t, "epochs", c.train.train.epochs);
      get_if(t, "batch_size", c.train.train.batch_size);
      get_if(t, "lambda_t", c.train.train.weights.trans);
      get_if(t, "lambda_r", c.train.train.weights.rot);
      get_if(t, "datasets", c.train.datasets);
      get_if(t, "validation_fraction", c.train.validation_fraction);
      get_if(t, "aor_factor", c.train.aor_factor);
    }
    if (j.contains("estimator")) c.estimator = estimator_config_from_json(j.at("estimator"));
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      only_keys(e, {"modes", "seeds", "threads", "scenarios"}, "eval");
      if (e.contains("modes")) {
        c.eval.modes.clear();
        for (const auto& m : e.at("modes")) c.eval.modes.push_back(parse_filter_mode(m.get<std::string>()));
      }
      get_if(e, "seeds", c.eval.seeds);
      get_if(e, "threads", c.eval.threads);
      if (e.contains("scenarios")) c.eval.scenarios = parse_scenarios(e.at("scenarios").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  if (c.train.datasets < 2) throw Error(ErrorCode::InvalidConfig, "train.datasets must be at least 2");
  if (!(c.train.validation_fraction > 0.0 && c.train.validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train.validation_fraction must be in (0, 1)");
  }
  if (c.eval.modes.empty()) throw Error(ErrorCode::InvalidConfig, "eval.modes is empty");
  if (c.eval.seeds == 0) throw Error(ErrorCode::InvalidConfig, "eval.seeds must be at least 1");
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_text(file));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, file.string() + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t simulation_seed(std::uint64_t global_seed) { return derive_seed(global_seed, "sim"); }

std::string HeadBundle::to_json() const {
  json j = json::parse(head.to_json());
  j["aor_defaults"] = {{"max_trace_trans", aor_max_trace_trans}, {"max_trace_rot", aor_max_trace_rot}};
  return j.dump(2) + "\n";
}

HeadBundle HeadBundle::from_json(const std::string& text) {
  HeadBundle b;
  b.head = UncertaintyHead::from_json(text);
  try {
    const json j = json::parse(text);
    if (j.contains("aor_defaults")) {
      b.aor_max_trace_trans = j.at("aor_defaults").at("max_trace_trans").get<double>();
      b.aor_max_trace_rot = j.at("aor_defaults").at("max_trace_rot").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("head json: ") + e.what());
  }
  return b;
}

HeadBundle HeadBundle::load(const fs::path& file) {
  if (!fs::exists(file)) throw Error(ErrorCode::MissingHead, "head file not found: " + file.string());
  return from_json(read_text(file));
}

Dataset simulate_from_config(const RunConfig& cfg) {
  TrajectorySpec spec = cfg.trajectory;
  spec.seed = simulation_seed(cfg.seed);
  return simulate_dataset(spec, cfg.layout, cfg.noise);
}

TrainOutcome train_from_config(const RunConfig& cfg) {
  const std::size_t n = cfg.train.datasets;
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.train.validation_fraction * n)));
  if (n_val >= n) throw Error(ErrorCode::InvalidConfig, "validation split leaves no training data");
  const std::uint64_t train_seed = derive_seed(cfg.seed, "train");

  std::vector<ErrorSample> train;
  std::vector<ErrorSample> val;
  for (std::size_t i = 0; i < n; ++i) {
    TrajectorySpec spec = cfg.trajectory;
    spec.seed = derive_seed(train_seed, static_cast<std::uint64_t>(i));
    const Dataset ds = simulate_dataset(spec, cfg.layout, cfg.noise);
    const auto samples = make_error_samples(ds.measurements);
    auto& dst = i < n - n_val ? train : val;
    dst.insert(dst.end(), samples.begin(), samples.end());
  }
  if (train.empty() || val.empty()) throw Error(ErrorCode::EmptyBatch, "training produced no measurements");

  TrainOutcome out;
  TrainConfig tc = cfg.train.train;
  tc.seed = derive_seed(cfg.seed, "shuffle");
  out.bundle.head = train_head(train, tc, &out.report);
  const GatingConfig g = aor_gating_from_head(out.bundle.head, train, cfg.train.aor_factor);
  out.bundle.aor_max_trace_trans = g.aor_max_trace_trans;
  out.bundle.aor_max_trace_rot = g.aor_max_trace_rot;
  out.validation = calibration_report(out.bundle.head, val);
  out.train_samples = train.size();
  out.validation_samples = val.size();
  return out;
}

EstimatorConfig estimator_for_mode(const RunConfig& cfg, FilterMode mode, const HeadBundle* bundle) {
  EstimatorConfig e = cfg.estimator;
  e.mode = mode;
  if (mode == FilterMode::AleatoricAor) {
    if (!std::isfinite(e.gating.aor_max_trace_trans) && bundle && bundle->aor_max_trace_trans > 0.0) {
      e.gating.aor_max_trace_trans = bundle->aor_max_trace_trans;
    }
    if (!std::isfinite(e.gating.aor_max_trace_rot) && bundle && bundle->aor_max_trace_rot > 0.0) {
      e.gating.aor_max_trace_rot = bundle->aor_max_trace_rot;
    }
    if (!std::isfinite(e.gating.aor_max_trace_trans) && !std::isfinite(e.gating.aor_max_trace_rot)) {
      throw Error(ErrorCode::InvalidConfig, "AOR mode needs thresholds in estimator.gating or the head file");
    }
  }
  return e;
}

std::vector<Scenario> eval_scenarios(const RunConfig& cfg) {
  switch (cfg.eval.scenarios) {
    case EvalScenarios::MultiObject: return multi_object_scenarios();
    case EvalScenarios::GrossOutlier: return {gross_outlier_scenario()};
    case EvalScenarios::Config: break;
  }
  Scenario s;
  s.name = "config";
  s.spec = cfg.trajectory;
  s.layout = cfg.layout;
  s.profile = cfg.noise;
  return {s};
}

void guard_outputs(const std::vector<fs::path>& files, bool force) {
  if (force) return;
  for (const auto& f : files) {
    if (fs::exists(f)) {
      throw Error(ErrorCode::Io, "refusing to overwrite " + f.string() + " (pass --force)");
    }
  }
}

}  // namespace aleanav
