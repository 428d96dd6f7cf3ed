#include "aleanav/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "aleanav/error.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

template <int N>
double pinv_quadratic(const Eigen::Matrix<double, N, 1>& e, const Eigen::Matrix<double, N, N>& P) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(0.5 * (P + P.transpose()));
  const double tol = 1e-14 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  const Eigen::Matrix<double, N, 1> y = es.eigenvectors().transpose() * e;
  double out = 0.0;
  for (int i = 0; i < N; ++i) {
    if (es.eigenvalues()[i] > tol) out += y[i] * y[i] / es.eigenvalues()[i];
  }
  return out;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["rmse_position_m"] = rmse_position;
  j["rmse_orientation_deg"] = rmse_orientation_deg;
  j["max_position_error_m"] = max_position_error;
  j["mean_nees"] = mean_nees;
  j["picp_095"] = picp;
  j["anchor_switches"] = anchor_switches;
  j["aor_rejections"] = aor_rejections;
  j["gate_rejections"] = gate_rejections;
  j["samples"] = samples;
  return j.dump(2);
}

long nearest_truth(std::span<const TruthSample> truth, double t, double tol) {
  if (truth.empty()) return -1;
  const auto it = std::lower_bound(truth.begin(), truth.end(), t,
                                   [](const TruthSample& s, double x) { return s.t < x; });
  long best = -1;
  double best_d = tol;
  auto consider = [&](auto pos) {
    if (pos < truth.begin() || pos >= truth.end()) return;
    const double d = std::abs(pos->t - t);
    if (d <= best_d) {
      best_d = d;
      best = static_cast<long>(pos - truth.begin());
    }
  };
  consider(it);
  if (it != truth.begin()) consider(it - 1);
  return best;
}

Eigen::Matrix<double, 9, 1> navigation_error(const TrajectoryRow& row, const TruthSample& truth) {
  Eigen::Matrix<double, 9, 1> e;
  e.segment<3>(0) = truth.pose.p - row.pose.p;
  e.segment<3>(3) = truth.v - row.v;
  e.segment<3>(6) = quat_log(row.pose.q.conjugate() * truth.pose.q);
  return e;
}

double core_nees(const TrajectoryRow& row, const TruthSample& truth) {
  Eigen::Matrix<double, 15, 1> e;
  e.head<9>() = navigation_error(row, truth);
  e.segment<3>(9) = truth.gyro_bias - row.bg;
  e.segment<3>(12) = truth.accel_bias - row.ba;
  return pinv_quadratic<15>(e, row.core_cov);
}

MetricsReport compute_metrics(const TrajectoryResult& result, std::span<const TruthSample> truth,
                              double imu_rate) {
  std::vector<const TrajectoryRow*> rows;
  rows.reserve(result.rows.size());
  for (const auto& r : result.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->t < b->t; });

  const double tol = 0.5 / imu_rate;
  MetricsReport rep;
  double sum_p2 = 0.0;
  double sum_r2 = 0.0;
  double sum_nees = 0.0;
  std::array<std::size_t, 6> inside{};
  const double z = central_z(0.95);

  for (const auto* row : rows) {
    const long k = nearest_truth(truth, row->t, tol);
    if (k < 0) continue;
    const TruthSample& gt = truth[static_cast<std::size_t>(k)];
    const auto e = navigation_error(*row, gt);
    const double ep = e.head<3>().norm();
    const double er = e.tail<3>().norm();
    sum_p2 += ep * ep;
    sum_r2 += er * er;
    rep.max_position_error = std::max(rep.max_position_error, ep);

    const Eigen::Matrix<double, 9, 9> P9 = row->core_cov.topLeftCorner<9, 9>();
    sum_nees += pinv_quadratic<9>(e, P9);
    for (int i = 0; i < 3; ++i) {
      if (std::abs(e[i]) <= z * std::sqrt(std::max(P9(i, i), 0.0))) ++inside[static_cast<std::size_t>(i)];
      if (std::abs(e[6 + i]) <= z * std::sqrt(std::max(P9(6 + i, 6 + i), 0.0))) {
        ++inside[static_cast<std::size_t>(3 + i)];
      }
    }
    ++rep.samples;
  }
  if (rep.samples == 0) throw Error(ErrorCode::EmptyOverlap, "compute_metrics: no result row matches the truth");

  const double n = static_cast<double>(rep.samples);
  rep.rmse_position = std::sqrt(sum_p2 / n);
  rep.rmse_orientation_deg = std::sqrt(sum_r2 / n) * kRadToDeg;
  rep.mean_nees = sum_nees / n;
  for (std::size_t i = 0; i < 6; ++i) rep.picp[i] = static_cast<double>(inside[i]) / n;
  rep.anchor_switches = result.anchor_switches;
  rep.aor_rejections = result.aor_rejections;
  rep.gate_rejections = result.gate_rejections;
  return rep;
}

// ---------------------------------------------------------------------------
// Mode comparison

const ModeSummary& ComparisonTable::of(FilterMode mode) const {
  return summary[mode_index(mode)];
}

std::size_t ComparisonTable::mode_index(FilterMode mode) const {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] == mode) return i;
  }
  throw Error(ErrorCode::InvalidConfig, "mode not part of the comparison");
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "mode,rmse_position_mean,rmse_position_std,rmse_orientation_deg_mean,rmse_orientation_deg_std,"
        "max_pe_mean,max_pe_std,nees_mean,anchor_switches_mean,rejections_mean,wins\n";
  for (const auto& s : summary) {
    os << to_string(s.mode) << ',' << s.rmse_position_mean << ',' << s.rmse_position_std << ','
       << s.rmse_orientation_mean << ',' << s.rmse_orientation_std << ',' << s.max_pe_mean << ','
       << s.max_pe_std << ',' << s.nees_mean << ',' << s.switches_mean << ',' << s.rejections_mean << ','
       << s.wins << '\n';
  }
  return os.str();
}

std::string ComparisonTable::to_text() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %16s %16s %16s %8s %6s\n", "mode", "RMSE [m]", "RMSE [deg]",
                "Max PE [m]", "NEES", "wins");
  os << buf;
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%-22s %7.4f+-%-7.4f %7.3f+-%-7.3f %7.4f+-%-7.4f %8.2f %6d\n",
                  std::string(to_string(s.mode)).c_str(), s.rmse_position_mean, s.rmse_position_std,
                  s.rmse_orientation_mean, s.rmse_orientation_std, s.max_pe_mean, s.max_pe_std, s.nees_mean,
                  s.wins);
    os << buf;
  }
  return os.str();
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t seed_index) {
  return derive_seed(derive_seed(base_seed, "runs"), static_cast<std::uint64_t>(seed_index));
}

ComparisonTable compare_modes(std::span<const Scenario> scenarios, std::span<const FilterMode> modes,
                              std::size_t seeds, std::uint64_t base_seed, const EstimatorConfig& base,
                              const UncertaintyHead* head, unsigned threads) {
  if (seeds == 0) throw Error(ErrorCode::InvalidConfig, "compare_modes: need at least one seed");
  if (scenarios.empty() || modes.empty()) throw Error(ErrorCode::InvalidConfig, "compare_modes: nothing to run");

  ComparisonTable table;
  table.modes.assign(modes.begin(), modes.end());
  const std::size_t jobs = scenarios.size() * seeds;
  std::vector<std::vector<RunRecord>> per_job(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        const std::size_t sc = j / seeds;
        const std::size_t si = j % seeds;
        const Scenario& scenario = scenarios[sc];
        TrajectorySpec spec = scenario.spec;
        spec.seed = derive_seed(run_seed(base_seed, si), static_cast<std::uint64_t>(sc));
        const Dataset ds = simulate_dataset(spec, scenario.layout, scenario.profile);
        for (FilterMode mode : modes) {
          EstimatorConfig cfg = base;
          cfg.mode = mode;
          const TrajectoryResult res = run(ds, cfg, head);
          RunRecord rec;
          rec.scenario = sc;
          rec.seed_index = si;
          rec.seed = spec.seed;
          rec.mode = mode;
          rec.metrics = compute_metrics(res, ds.truth, ds.spec.imu_rate);
          per_job[j].push_back(rec);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs);
        return;
      }
    }
  };

  const unsigned n_threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& v : per_job) {
    for (auto& r : v) table.runs.push_back(r);
  }

  const std::size_t M = modes.size();
  table.seed_mean_rmse_position.assign(M, std::vector<double>(seeds, 0.0));
  table.seed_mean_rmse_orientation.assign(M, std::vector<double>(seeds, 0.0));
  std::vector<std::vector<double>> rp(M), ro(M), pe(M), nees(M), sw(M), rej(M);
  for (const auto& r : table.runs) {
    const std::size_t m = table.mode_index(r.mode);
    rp[m].push_back(r.metrics.rmse_position);
    ro[m].push_back(r.metrics.rmse_orientation_deg);
    pe[m].push_back(r.metrics.max_position_error);
    nees[m].push_back(r.metrics.mean_nees);
    sw[m].push_back(r.metrics.anchor_switches);
    rej[m].push_back(r.metrics.aor_rejections + r.metrics.gate_rejections);
    const double w = 1.0 / static_cast<double>(scenarios.size());
    table.seed_mean_rmse_position[m][r.seed_index] += w * r.metrics.rmse_position;
    table.seed_mean_rmse_orientation[m][r.seed_index] += w * r.metrics.rmse_orientation_deg;
  }

  table.summary.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    ModeSummary& s = table.summary[m];
    s.mode = modes[m];
    mean_std(rp[m], s.rmse_position_mean, s.rmse_position_std);
    mean_std(ro[m], s.rmse_orientation_mean, s.rmse_orientation_std);
    mean_std(pe[m], s.max_pe_mean, s.max_pe_std);
    double unused = 0.0;
    mean_std(nees[m], s.nees_mean, unused);
    mean_std(sw[m], s.switches_mean, unused);
    mean_std(rej[m], s.rejections_mean, unused);
  }
  for (std::size_t si = 0; si < seeds; ++si) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < M; ++m) {
      if (table.seed_mean_rmse_position[m][si] < table.seed_mean_rmse_position[best][si]) best = m;
    }
    ++table.summary[best].wins;
  }
  return table;
}

}  // namespace aleanav
