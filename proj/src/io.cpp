#include "aleanav/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aleanav/error.hpp"

namespace aleanav {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* context) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(context) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorCode::InvalidConfig, std::string(context) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("key '") + key + "': " + e.what());
    }
  }
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec3 vec3_from(const json& j, const char* context) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidConfig, std::string(context) + ": need 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json sectors_json(const std::vector<ObjectSectors>& sectors) {
  json a = json::array();
  for (const auto& s : sectors) {
    json iv = json::array();
    for (const auto& i : s.intervals) iv.push_back({i.lo_deg, i.hi_deg});
    a.push_back({{"object_id", s.object_id}, {"intervals_deg", iv}});
  }
  return a;
}

std::vector<ObjectSectors> sectors_from(const json& j) {
  std::vector<ObjectSectors> out;
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "sectors: expected an array");
  for (const auto& s : j) {
    check_keys(s, {"object_id", "intervals_deg"}, "sector");
    ObjectSectors os;
    os.object_id = s.at("object_id").get<ObjectId>();
    for (const auto& iv : s.at("intervals_deg")) {
      if (!iv.is_array() || iv.size() != 2) throw Error(ErrorCode::InvalidConfig, "sector interval needs [lo, hi]");
      os.intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
    }
    out.push_back(std::move(os));
  }
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string header) { out_ << header << '\n'; }
  CsvWriter& operator<<(double x) {
    sep();
    out_ << format_double(x);
    return *this;
  }
  CsvWriter& integer(long long x) {
    sep();
    out_ << x;
    return *this;
  }
  CsvWriter& text(std::string_view s) {
    sep();
    out_ << s;
    return *this;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }
  std::string str() const { return out_.str(); }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostringstream out_;
  bool first_ = true;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& file, std::size_t min_cols) {
  std::istringstream in(read_text(file));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty file " + file.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() < min_cols) {
      throw Error(ErrorCode::Io, file.filename().string() + ": row with " + std::to_string(fields.size()) +
                                     " columns, expected " + std::to_string(min_cols));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

double num(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::Io, "not a number: '" + s + "'");
  return v;
}

Pose pose_at(const std::vector<std::string>& f, std::size_t i) {
  std::array<double, 7> a{};
  for (std::size_t k = 0; k < 7; ++k) a[k] = num(f[i + k]);
  return Pose::from_array(a);
}

void put_pose(CsvWriter& w, const Pose& p) {
  for (double x : p.to_array()) w << x;
}

constexpr const char* kPoseCols = "px,py,pz,qx,qy,qz,qw";

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json to_json(const Pose& pose) {
  return {{"p", vec_json(pose.p)}, {"q_xyzw", {pose.q.x(), pose.q.y(), pose.q.z(), pose.q.w()}}};
}

Pose pose_from_json(const json& j) {
  check_keys(j, {"p", "q_xyzw"}, "pose");
  const Vec3 p = vec3_from(j.at("p"), "pose.p");
  const auto& q = j.at("q_xyzw");
  if (!q.is_array() || q.size() != 4) throw Error(ErrorCode::InvalidConfig, "pose.q_xyzw: need 4 numbers");
  const Quat quat(q[3].get<double>(), q[0].get<double>(), q[1].get<double>(), q[2].get<double>());
  if (!(quat.norm() > 1e-12)) throw Error(ErrorCode::InvalidConfig, "pose.q_xyzw: zero quaternion");
  return Pose(p, quat.normalized());
}

json to_json(const TrajectorySpec& s) {
  return {{"duration", s.duration},
          {"imu_rate", s.imu_rate},
          {"cam_rate", s.cam_rate},
          {"radius_min", s.radius_min},
          {"radius_max", s.radius_max},
          {"radius_frequency", s.radius_frequency},
          {"height_base", s.height_base},
          {"height_amplitude", s.height_amplitude},
          {"height_frequency", s.height_frequency},
          {"angular_span_deg", s.angular_span_deg},
          {"start_angle_deg", s.start_angle_deg},
          {"camera_extrinsic", to_json(s.camera_extrinsic)},
          {"seed", s.seed}};
}

TrajectorySpec trajectory_spec_from_json(const json& j, TrajectorySpec s) {
  check_keys(j,
             {"duration", "imu_rate", "cam_rate", "radius_min", "radius_max", "radius_frequency", "height_base",
              "height_amplitude", "height_frequency", "angular_span_deg", "start_angle_deg", "camera_extrinsic",
              "seed"},
             "trajectory");
  read(j, "duration", s.duration);
  read(j, "imu_rate", s.imu_rate);
  read(j, "cam_rate", s.cam_rate);
  read(j, "radius_min", s.radius_min);
  read(j, "radius_max", s.radius_max);
  read(j, "radius_frequency", s.radius_frequency);
  read(j, "height_base", s.height_base);
  read(j, "height_amplitude", s.height_amplitude);
  read(j, "height_frequency", s.height_frequency);
  read(j, "angular_span_deg", s.angular_span_deg);
  read(j, "start_angle_deg", s.start_angle_deg);
  if (j.contains("camera_extrinsic")) s.camera_extrinsic = pose_from_json(j.at("camera_extrinsic"));
  read(j, "seed", s.seed);
  return s;
}

json to_json(const NoiseProfile& p) {
  return {{"trans_a", p.trans_a},
          {"trans_b", p.trans_b},
          {"rot_a", p.rot_a},
          {"rot_b", p.rot_b},
          {"trans_axis_scale", vec_json(p.trans_axis_scale)},
          {"rot_axis_scale", vec_json(p.rot_axis_scale)},
          {"outlier_probability", p.outlier_probability},
          {"outlier_scale", p.outlier_scale},
          {"occlusion", sectors_json(p.occlusion)},
          {"ambiguity", sectors_json(p.ambiguity)},
          {"ambiguity_scale", p.ambiguity_scale},
          {"gyro_noise_density", p.gyro_noise_density},
          {"accel_noise_density", p.accel_noise_density},
          {"gyro_bias_walk", p.gyro_bias_walk},
          {"accel_bias_walk", p.accel_bias_walk},
          {"gyro_bias_init", p.gyro_bias_init},
          {"accel_bias_init", p.accel_bias_init}};
}

NoiseProfile noise_profile_from_json(const json& j, NoiseProfile p) {
  check_keys(j,
             {"trans_a", "trans_b", "rot_a", "rot_b", "trans_axis_scale", "rot_axis_scale", "outlier_probability",
              "outlier_scale", "occlusion", "ambiguity", "ambiguity_scale", "gyro_noise_density",
              "accel_noise_density", "gyro_bias_walk", "accel_bias_walk", "gyro_bias_init", "accel_bias_init"},
             "noise");
  read(j, "trans_a", p.trans_a);
  read(j, "trans_b", p.trans_b);
  read(j, "rot_a", p.rot_a);
  read(j, "rot_b", p.rot_b);
  if (j.contains("trans_axis_scale")) p.trans_axis_scale = vec3_from(j.at("trans_axis_scale"), "trans_axis_scale");
  if (j.contains("rot_axis_scale")) p.rot_axis_scale = vec3_from(j.at("rot_axis_scale"), "rot_axis_scale");
  read(j, "outlier_probability", p.outlier_probability);
  read(j, "outlier_scale", p.outlier_scale);
  if (j.contains("occlusion")) p.occlusion = sectors_from(j.at("occlusion"));
  if (j.contains("ambiguity")) p.ambiguity = sectors_from(j.at("ambiguity"));
  read(j, "ambiguity_scale", p.ambiguity_scale);
  read(j, "gyro_noise_density", p.gyro_noise_density);
  read(j, "accel_noise_density", p.accel_noise_density);
  read(j, "gyro_bias_walk", p.gyro_bias_walk);
  read(j, "accel_bias_walk", p.accel_bias_walk);
  read(j, "gyro_bias_init", p.gyro_bias_init);
  read(j, "accel_bias_init", p.accel_bias_init);
  return p;
}

json to_json(const ObjectLayout& layout) {
  json objs = json::array();
  for (const auto& o : layout.objects) {
    objs.push_back({{"id", o.id}, {"pose", to_json(o.pose)}, {"size", o.size}});
  }
  return {{"objects", objs}, {"anchor_id", layout.anchor_id}};
}

ObjectLayout layout_from_json(const json& j) {
  check_keys(j, {"objects", "anchor_id"}, "layout");
  ObjectLayout l;
  for (const auto& o : j.at("objects")) {
    check_keys(o, {"id", "pose", "size"}, "layout object");
    ObjectSpec s;
    s.id = o.at("id").get<ObjectId>();
    s.pose = pose_from_json(o.at("pose"));
    read(o, "size", s.size);
    l.objects.push_back(s);
  }
  l.anchor_id = j.at("anchor_id").get<ObjectId>();
  l.validate();
  return l;
}

json to_json(const EstimatorConfig& c) {
  json j = {{"mode", std::string(to_string(c.mode))},
            {"fixed_sigma_t", c.fixed_sigma_t},
            {"fixed_sigma_rot", c.fixed_sigma_rot},
            {"hysteresis", c.hysteresis},
            {"max_candidate_trace", c.max_candidate_trace},
            {"covariance_model", c.covariance_model == CovarianceModel::Full ? "full" : "block_diagonal"},
            {"perturb_initial_state", c.perturb_initial_state}};
  json g = {{"aor_max_trace_trans", nullptr}, {"aor_max_trace_rot", nullptr}, {"mahalanobis_threshold", nullptr}};
  if (std::isfinite(c.gating.aor_max_trace_trans)) g["aor_max_trace_trans"] = c.gating.aor_max_trace_trans;
  if (std::isfinite(c.gating.aor_max_trace_rot)) g["aor_max_trace_rot"] = c.gating.aor_max_trace_rot;
  if (c.gating.mahalanobis_threshold) g["mahalanobis_threshold"] = *c.gating.mahalanobis_threshold;
  j["gating"] = g;
  if (c.prior) {
    const auto& p = *c.prior;
    j["prior"] = {{"position", p.position},
                  {"velocity", p.velocity},
                  {"attitude", p.attitude},
                  {"gyro_bias", p.gyro_bias},
                  {"accel_bias", p.accel_bias},
                  {"extrinsic_position", p.extrinsic_position},
                  {"extrinsic_rotation", p.extrinsic_rotation},
                  {"object_position", p.object_position},
                  {"object_rotation", p.object_rotation}};
  }
  return j;
}

EstimatorConfig estimator_config_from_json(const json& j, EstimatorConfig c) {
  check_keys(j,
             {"mode", "fixed_sigma_t", "fixed_sigma_rot", "hysteresis", "max_candidate_trace", "covariance_model",
              "perturb_initial_state", "gating", "prior"},
             "estimator");
  if (j.contains("mode")) c.mode = parse_filter_mode(j.at("mode").get<std::string>());
  read(j, "fixed_sigma_t", c.fixed_sigma_t);
  read(j, "fixed_sigma_rot", c.fixed_sigma_rot);
  read(j, "hysteresis", c.hysteresis);
  read(j, "max_candidate_trace", c.max_candidate_trace);
  read(j, "perturb_initial_state", c.perturb_initial_state);
  if (j.contains("covariance_model")) {
    const auto m = j.at("covariance_model").get<std::string>();
    if (m == "full") {
      c.covariance_model = CovarianceModel::Full;
    } else if (m == "block_diagonal") {
      c.covariance_model = CovarianceModel::BlockDiagonal;
    } else {
      throw Error(ErrorCode::InvalidConfig, "covariance_model must be 'full' or 'block_diagonal'");
    }
  }
  if (!(c.fixed_sigma_t > 0.0) || !(c.fixed_sigma_rot > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "fixed sigmas must be positive");
  }
  if (!(c.hysteresis >= 1.0)) throw Error(ErrorCode::InvalidConfig, "hysteresis must be >= 1");
  if (j.contains("gating")) {
    const auto& g = j.at("gating");
    check_keys(g, {"aor_max_trace_trans", "aor_max_trace_rot", "mahalanobis_threshold"}, "gating");
    auto opt = [&](const char* key, double& out) {
      if (g.contains(key) && !g.at(key).is_null()) {
        out = g.at(key).get<double>();
        if (!(out > 0.0)) throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be positive");
      }
    };
    opt("aor_max_trace_trans", c.gating.aor_max_trace_trans);
    opt("aor_max_trace_rot", c.gating.aor_max_trace_rot);
    if (g.contains("mahalanobis_threshold") && !g.at("mahalanobis_threshold").is_null()) {
      double t = 0.0;
      opt("mahalanobis_threshold", t);
      c.gating.mahalanobis_threshold = t;
    }
  }
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    check_keys(p,
               {"position", "velocity", "attitude", "gyro_bias", "accel_bias", "extrinsic_position",
                "extrinsic_rotation", "object_position", "object_rotation"},
               "prior");
    PriorConfig pc = c.prior.value_or(PriorConfig{});
    read(p, "position", pc.position);
    read(p, "velocity", pc.velocity);
    read(p, "attitude", pc.attitude);
    read(p, "gyro_bias", pc.gyro_bias);
    read(p, "accel_bias", pc.accel_bias);
    read(p, "extrinsic_position", pc.extrinsic_position);
    read(p, "extrinsic_rotation", pc.extrinsic_rotation);
    read(p, "object_position", pc.object_position);
    read(p, "object_rotation", pc.object_rotation);
    c.prior = pc;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
  }
  fs::rename(tmp, file);
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);

  CsvWriter imu("t,wx,wy,wz,ax,ay,az");
  for (const auto& s : ds.imu) {
    imu << s.t << s.gyro.x() << s.gyro.y() << s.gyro.z() << s.accel.x() << s.accel.y() << s.accel.z();
    imu.end();
  }
  write_text(dir / "imu.csv", imu.str());

  std::string header = "t,object_id";
  for (const char* pre : {"m_", "true_"}) {
    for (const char* c : {"px", "py", "pz", "qx", "qy", "qz", "qw"}) header += std::string(",") + pre + c;
  }
  header += ",var_tx,var_ty,var_tz,var_rx,var_ry,var_rz,f_distance,f_azimuth,f_elevation,f_cos_view,f_size,outlier";
  CsvWriter meas(header);
  for (const auto& m : ds.measurements) {
    meas << m.t;
    meas.integer(m.object_id);
    put_pose(meas, m.measured);
    put_pose(meas, m.truth);
    for (int i = 0; i < 6; ++i) meas << m.true_var[i];
    for (int i = 0; i < 5; ++i) meas << m.features[i];
    meas.integer(m.outlier ? 1 : 0);
    meas.end();
  }
  write_text(dir / "meas.csv", meas.str());

  CsvWriter truth(std::string("t,") + kPoseCols + ",vx,vy,vz,bgx,bgy,bgz,bax,bay,baz");
  for (const auto& s : ds.truth) {
    truth << s.t;
    put_pose(truth, s.pose);
    for (int i = 0; i < 3; ++i) truth << s.v[i];
    for (int i = 0; i < 3; ++i) truth << s.gyro_bias[i];
    for (int i = 0; i < 3; ++i) truth << s.accel_bias[i];
    truth.end();
  }
  write_text(dir / "truth.csv", truth.str());

  write_text(dir / "layout.json", to_json(ds.layout).dump(2) + "\n");
  const json spec = {{"trajectory", to_json(ds.spec)}, {"noise", to_json(ds.profile)}};
  write_text(dir / "spec.json", spec.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "dataset directory not found: " + dir.string());
  Dataset ds;
  try {
    const json spec = json::parse(read_text(dir / "spec.json"));
    ds.spec = trajectory_spec_from_json(spec.at("trajectory"));
    ds.profile = noise_profile_from_json(spec.at("noise"));
    ds.layout = layout_from_json(json::parse(read_text(dir / "layout.json")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed dataset json: ") + e.what());
  }

  for (const auto& f : read_csv(dir / "imu.csv", 7)) {
    ImuSample s;
    s.t = num(f[0]);
    s.gyro = Vec3(num(f[1]), num(f[2]), num(f[3]));
    s.accel = Vec3(num(f[4]), num(f[5]), num(f[6]));
    ds.imu.push_back(s);
  }
  for (const auto& f : read_csv(dir / "meas.csv", 28)) {
    MeasurementRecord m;
    m.t = num(f[0]);
    m.object_id = static_cast<ObjectId>(num(f[1]));
    m.measured = pose_at(f, 2);
    m.truth = pose_at(f, 9);
    for (int i = 0; i < 6; ++i) m.true_var[i] = num(f[16 + static_cast<std::size_t>(i)]);
    for (int i = 0; i < 5; ++i) m.features[i] = num(f[22 + static_cast<std::size_t>(i)]);
    m.outlier = num(f[27]) != 0.0;
    ds.measurements.push_back(m);
  }
  for (const auto& f : read_csv(dir / "truth.csv", 17)) {
    TruthSample s;
    s.t = num(f[0]);
    s.pose = pose_at(f, 1);
    s.v = Vec3(num(f[8]), num(f[9]), num(f[10]));
    s.gyro_bias = Vec3(num(f[11]), num(f[12]), num(f[13]));
    s.accel_bias = Vec3(num(f[14]), num(f[15]), num(f[16]));
    ds.truth.push_back(s);
  }
  return ds;
}

void save_trajectory(const TrajectoryResult& r, const fs::path& file) {
  const Eigen::Index dim = r.rows.empty() ? 0 : r.rows.front().cov_diag.size();
  std::string header = std::string("t,") + kPoseCols + ",vx,vy,vz";
  for (Eigen::Index i = 0; i < dim; ++i) header += ",cov_" + std::to_string(i);
  header += ",anchor_id,event";
  CsvWriter w(header);
  for (const auto& row : r.rows) {
    if (row.cov_diag.size() != dim) throw Error(ErrorCode::LengthMismatch, "save_trajectory: ragged covariance");
    w << row.t;
    put_pose(w, row.pose);
    for (int i = 0; i < 3; ++i) w << row.v[i];
    for (Eigen::Index i = 0; i < dim; ++i) w << row.cov_diag[i];
    w.integer(row.anchor_id);
    w.text(to_string(row.event));
    w.end();
  }
  write_text(file, w.str());
}

TrajectoryResult load_trajectory(const fs::path& file) {
  TrajectoryResult r;
  const auto rows = read_csv(file, 13);
  for (const auto& f : rows) {
    TrajectoryRow row;
    const std::size_t dim = f.size() - 13;
    row.t = num(f[0]);
    row.pose = pose_at(f, 1);
    row.v = Vec3(num(f[8]), num(f[9]), num(f[10]));
    row.cov_diag.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) row.cov_diag[static_cast<Eigen::Index>(i)] = num(f[11 + i]);
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(15, row.cov_diag.size()); ++i) {
      row.core_cov(i, i) = row.cov_diag[i];
    }
    row.anchor_id = static_cast<ObjectId>(num(f[11 + dim]));
    const std::string& ev = f[12 + dim];
    if (ev == "OK") {
      row.event = EpochEvent::Ok;
    } else if (ev == "AOR") {
      row.event = EpochEvent::Aor;
    } else if (ev == "GATE") {
      row.event = EpochEvent::Gate;
    } else {
      throw Error(ErrorCode::Io, "unknown event code '" + ev + "'");
    }
    if (!r.rows.empty() && row.anchor_id != r.rows.back().anchor_id) ++r.anchor_switches;
    if (row.event == EpochEvent::Aor) ++r.aor_rejections;
    if (row.event == EpochEvent::Gate) ++r.gate_rejections;
    r.rows.push_back(std::move(row));
  }
  return r;
}

void save_measurement_log(const TrajectoryResult& r, const fs::path& file) {
  CsvWriter w("t,object_id,distance,var_tx,var_ty,var_tz,var_rx,var_ry,var_rz,outcome");
  for (const auto& m : r.measurements) {
    w << m.t;
    w.integer(m.object_id);
    w << m.distance;
    for (int i = 0; i < 6; ++i) w << m.variances[i];
    w.text(to_string(m.outcome));
    w.end();
  }
  write_text(file, w.str());
}

void save_error_series(const TrajectoryResult& r, std::span<const TruthSample> truth, double imu_rate,
                       const fs::path& file) {
  CsvWriter w("t,position_error_m,orientation_error_deg,sigma_position_m,sigma_attitude_deg,anchor_id");
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  for (const auto& row : r.rows) {
    const long k = nearest_truth(truth, row.t, 0.5 / imu_rate);
    if (k < 0) continue;
    const auto e = navigation_error(row, truth[static_cast<std::size_t>(k)]);
    w << row.t << e.head<3>().norm() << e.tail<3>().norm() * kDeg
      << std::sqrt(std::max(0.0, row.core_cov.block<3, 3>(0, 0).trace()))
      << std::sqrt(std::max(0.0, row.core_cov.block<3, 3>(6, 6).trace())) * kDeg;
    w.integer(row.anchor_id);
    w.end();
  }
  write_text(file, w.str());
}

}  // namespace aleanav
