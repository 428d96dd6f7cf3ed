#include "aleanav/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "aleanav/error.hpp"
#include "aleanav/random.hpp"

namespace aleanav {

namespace {

constexpr int kFormatVersion = 1;

template <typename Derived>
void append_row_major(std::vector<double>& out, const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
}

Eigen::MatrixXd read_row_major(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(rows * cols)) {
    throw Error(ErrorCode::InvalidConfig, "head json: weight array has wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Covariance types

PredictedCovariance PredictedCovariance::from_log_variance(const LogVariance& s) {
  const Vec6 v = s.array().exp();
  return {DiagCov3(Vec3(v.head<3>())), DiagCov3(Vec3(v.tail<3>()))};
}

PredictedCovariance PredictedCovariance::from_sigmas(double sigma_t, double sigma_rot) {
  return {DiagCov3::isotropic(sigma_t * sigma_t), DiagCov3::isotropic(sigma_rot * sigma_rot)};
}

Vec6 PredictedCovariance::variances() const {
  Vec6 v;
  v << trans.var, rot.var;
  return v;
}

ErrorSample make_error_sample(const MeasurementRecord& m) {
  ErrorSample s;
  s.e_t = m.measured.p - m.truth.p;
  s.e_r = quat_log(m.truth.q.conjugate() * m.measured.q);
  s.features = m.features;
  s.class_id = m.object_id;
  return s;
}

std::vector<ErrorSample> make_error_samples(std::span<const MeasurementRecord> records) {
  std::vector<ErrorSample> out;
  out.reserve(records.size());
  for (const auto& m : records) out.push_back(make_error_sample(m));
  return out;
}

// ---------------------------------------------------------------------------
// Loss

double nll_loss(const Vec3& e, const Vec3& s) {
  double l = 0.0;
  for (int i = 0; i < 3; ++i) l += std::exp(-s[i]) * e[i] * e[i] + s[i];
  return 0.5 * l;
}

Vec3 nll_loss_gradient(const Vec3& e, const Vec3& s) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) g[i] = 0.5 * (1.0 - std::exp(-s[i]) * e[i] * e[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Head

UncertaintyHead::UncertaintyHead(int hidden, int num_classes, std::uint64_t seed) {
  if (hidden < 1 || num_classes < 1) {
    throw Error(ErrorCode::InvalidConfig, "head needs hidden >= 1 and num_classes >= 1");
  }
  Rng rng(seed);
  // Glorot-uniform hidden layer; small output layer so the initial output is
  // dominated by the bias.
  const double lim1 = std::sqrt(6.0 / (kInputDim + hidden));
  const double lim2 = 0.1 * std::sqrt(6.0 / (hidden + 6));
  std::uniform_real_distribution<double> u1(-lim1, lim1);
  std::uniform_real_distribution<double> u2(-lim2, lim2);
  w1_.resize(hidden, kInputDim);
  for (Eigen::Index r = 0; r < w1_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = u1(rng);
  }
  b1_ = Eigen::VectorXd::Zero(hidden);
  w2_.resize(6 * num_classes, hidden);
  for (Eigen::Index r = 0; r < w2_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w2_.cols(); ++c) w2_(r, c) = u2(rng);
  }
  b2_ = Eigen::VectorXd::Zero(6 * num_classes);
}

std::size_t UncertaintyHead::parameter_count() const {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
}

void UncertaintyHead::check_class(int class_id) const {
  if (class_id < 0 || class_id >= num_classes()) {
    throw Error(ErrorCode::UnknownObject,
                "head has no output for class " + std::to_string(class_id));
  }
}

LogVariance UncertaintyHead::log_variance(const FeatureVec& features, int class_id) const {
  check_class(class_id);
  const Eigen::VectorXd x = ((features - mean_).array() / scale_.array()).matrix();
  const Eigen::VectorXd h = (w1_ * x + b1_).array().tanh().matrix();
  const LogVariance o = w2_.middleRows(6 * class_id, 6) * h + b2_.segment(6 * class_id, 6);
  return o.cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar);
}

PredictedCovariance UncertaintyHead::predict(const FeatureVec& features, int class_id) const {
  return PredictedCovariance::from_log_variance(log_variance(features, class_id));
}

void UncertaintyHead::set_standardization(const FeatureVec& mean, const FeatureVec& scale) {
  if (!(scale.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidConfig, "feature scale must be positive");
  }
  mean_ = mean;
  scale_ = scale;
}

Eigen::VectorXd UncertaintyHead::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  append_row_major(flat, w1_);
  append_row_major(flat, b1_.transpose());
  append_row_major(flat, w2_);
  append_row_major(flat, b2_.transpose());
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void UncertaintyHead::set_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count()) {
    throw Error(ErrorCode::LengthMismatch, "parameter vector has wrong size");
  }
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < w1_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = theta[k++];
  }
  for (Eigen::Index i = 0; i < b1_.size(); ++i) b1_[i] = theta[k++];
  for (Eigen::Index r = 0; r < w2_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w2_.cols(); ++c) w2_(r, c) = theta[k++];
  }
  for (Eigen::Index i = 0; i < b2_.size(); ++i) b2_[i] = theta[k++];
}

void UncertaintyHead::set_output_bias(int class_id, const LogVariance& bias) {
  check_class(class_id);
  b2_.segment(6 * class_id, 6) = bias;
}

std::string UncertaintyHead::to_json() const {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["activation"] = "tanh";
  j["input_dim"] = kInputDim;
  j["hidden"] = hidden();
  j["num_classes"] = num_classes();
  j["output_dim"] = 6 * num_classes();
  j["log_variance_clamp"] = {kMinLogVar, kMaxLogVar};
  std::vector<double> buf;
  append_row_major(buf, w1_);
  j["w1"] = buf;
  buf.clear();
  append_row_major(buf, b1_.transpose());
  j["b1"] = buf;
  buf.clear();
  append_row_major(buf, w2_);
  j["w2"] = buf;
  buf.clear();
  append_row_major(buf, b2_.transpose());
  j["b2"] = buf;
  j["feature_mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
  j["feature_scale"] = std::vector<double>(scale_.data(), scale_.data() + scale_.size());
  return j.dump(2);
}

UncertaintyHead UncertaintyHead::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("head json: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::InvalidConfig, "head json: unsupported format_version");
    }
    if (j.at("input_dim").get<int>() != kInputDim || j.at("activation").get<std::string>() != "tanh") {
      throw Error(ErrorCode::InvalidConfig, "head json: incompatible architecture");
    }
    const int hidden = j.at("hidden").get<int>();
    const int classes = j.at("num_classes").get<int>();
    UncertaintyHead head(hidden, classes, 0);
    head.w1_ = read_row_major(j.at("w1"), hidden, kInputDim);
    head.b1_ = read_row_major(j.at("b1"), 1, hidden).transpose();
    head.w2_ = read_row_major(j.at("w2"), 6 * classes, hidden);
    head.b2_ = read_row_major(j.at("b2"), 1, 6 * classes).transpose();
    const auto mean = read_row_major(j.at("feature_mean"), kInputDim, 1);
    const auto scale = read_row_major(j.at("feature_scale"), kInputDim, 1);
    head.set_standardization(mean, scale);
    return head;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("head json: ") + e.what());
  }
}

bool UncertaintyHead::operator==(const UncertaintyHead& o) const {
  return w1_ == o.w1_ && b1_ == o.b1_ && w2_ == o.w2_ && b2_ == o.b2_ && mean_ == o.mean_ &&
         scale_ == o.scale_;
}

// ---------------------------------------------------------------------------
// Batch loss and backprop

double batch_loss(std::span<const ErrorSample> samples, const UncertaintyHead& head,
                  const LossWeights& w) {
  return batch_loss_and_gradient(samples, head, w, nullptr);
}

double batch_loss_and_gradient(std::span<const ErrorSample> samples, const UncertaintyHead& head,
                               const LossWeights& w, Eigen::VectorXd* gradient) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "batch_loss: empty batch");
  const double n = static_cast<double>(samples.size());
  const int hidden = head.hidden();

  Eigen::MatrixXd gw1, gw2;
  Eigen::VectorXd gb1, gb2;
  if (gradient) {
    gw1 = Eigen::MatrixXd::Zero(head.w1_.rows(), head.w1_.cols());
    gb1 = Eigen::VectorXd::Zero(hidden);
    gw2 = Eigen::MatrixXd::Zero(head.w2_.rows(), head.w2_.cols());
    gb2 = Eigen::VectorXd::Zero(head.b2_.size());
  }

  Eigen::VectorXd x(UncertaintyHead::kInputDim);
  Eigen::VectorXd h(hidden);
  double loss_t = 0.0;
  double loss_r = 0.0;
  for (const auto& s : samples) {
    head.check_class(s.class_id);
    const Eigen::Index row = 6 * s.class_id;
    x = ((s.features - head.mean_).array() / head.scale_.array()).matrix();
    h = (head.w1_ * x + head.b1_).array().tanh().matrix();
    const Vec6 raw = head.w2_.middleRows(row, 6) * h + head.b2_.segment(row, 6);
    const Vec6 out = raw.cwiseMax(UncertaintyHead::kMinLogVar).cwiseMin(UncertaintyHead::kMaxLogVar);

    loss_t += nll_loss(s.e_t, out.head<3>());
    loss_r += nll_loss(s.e_r, out.tail<3>());

    if (!gradient) continue;
    Vec6 d_out;
    d_out << (w.trans / n) * nll_loss_gradient(s.e_t, out.head<3>()),
             (w.rot / n) * nll_loss_gradient(s.e_r, out.tail<3>());
    for (int i = 0; i < 6; ++i) {
      if (raw[i] < UncertaintyHead::kMinLogVar || raw[i] > UncertaintyHead::kMaxLogVar) d_out[i] = 0.0;
    }
    gw2.middleRows(row, 6).noalias() += d_out * h.transpose();
    gb2.segment(row, 6) += d_out;
    const Eigen::VectorXd dz =
        ((head.w2_.middleRows(row, 6).transpose() * d_out).array() * (1.0 - h.array().square())).matrix();
    gw1.noalias() += dz * x.transpose();
    gb1 += dz;
  }

  const double loss = w.trans * loss_t / n + w.rot * loss_r / n;
  if (gradient) {
    gradient->resize(static_cast<Eigen::Index>(head.parameter_count()));
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < gw1.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw1.cols(); ++c) (*gradient)[k++] = gw1(r, c);
    }
    for (Eigen::Index i = 0; i < gb1.size(); ++i) (*gradient)[k++] = gb1[i];
    for (Eigen::Index r = 0; r < gw2.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw2.cols(); ++c) (*gradient)[k++] = gw2(r, c);
    }
    for (Eigen::Index i = 0; i < gb2.size(); ++i) (*gradient)[k++] = gb2[i];
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training

UncertaintyHead initial_head(std::span<const ErrorSample> dataset, const TrainConfig& config) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyBatch, "train_head: empty dataset");
  int classes = 1;
  for (const auto& s : dataset) {
    if (s.class_id < 0) throw Error(ErrorCode::UnknownObject, "negative class id");
    classes = std::max(classes, s.class_id + 1);
  }
  UncertaintyHead head(config.hidden, classes, derive_seed(config.seed, "init"));

  const double n = static_cast<double>(dataset.size());
  FeatureVec mean = FeatureVec::Zero();
  for (const auto& s : dataset) mean += s.features;
  mean /= n;
  FeatureVec var = FeatureVec::Zero();
  for (const auto& s : dataset) var += (s.features - mean).cwiseAbs2();
  var /= n;
  FeatureVec scale = var.cwiseSqrt();
  for (int i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  }
  head.set_standardization(mean, scale);

  std::vector<Vec6> sum_sq(static_cast<std::size_t>(classes), Vec6::Zero());
  std::vector<double> count(static_cast<std::size_t>(classes), 0.0);
  for (const auto& s : dataset) {
    Vec6 e2;
    e2 << s.e_t.cwiseAbs2(), s.e_r.cwiseAbs2();
    sum_sq[static_cast<std::size_t>(s.class_id)] += e2;
    count[static_cast<std::size_t>(s.class_id)] += 1.0;
  }
  for (int c = 0; c < classes; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    if (count[ci] == 0.0) continue;
    const Vec6 mse = (sum_sq[ci] / count[ci]).cwiseMax(1e-12);
    head.set_output_bias(c, mse.array().log().matrix());
  }
  return head;
}

UncertaintyHead train_head(std::span<const ErrorSample> dataset, const TrainConfig& config,
                           TrainReport* report) {
  if (!(config.learning_rate > 0.0) || config.epochs < 0 || config.batch_size == 0) {
    throw Error(ErrorCode::InvalidConfig, "train_head: invalid training configuration");
  }
  UncertaintyHead head = initial_head(dataset, config);
  Eigen::VectorXd theta = head.parameters();
  Eigen::VectorXd grad;

  const double initial = batch_loss(dataset, head, config.weights);
  if (report) {
    report->initial_loss = initial;
    report->epoch_losses.clear();
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ErrorSample> batch;
  batch.reserve(config.batch_size);
  Rng rng(derive_seed(config.seed, "shuffle"));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      const double l = batch_loss_and_gradient(batch, head, config.weights, &grad);
      if (!std::isfinite(l) || !grad.allFinite()) {
        throw Error(ErrorCode::Divergence, "train_head: loss became non-finite (learning rate too high?)");
      }
      theta -= config.learning_rate * grad;
      head.set_parameters(theta);
    }
    const double epoch_loss = batch_loss(dataset, head, config.weights);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::Divergence, "train_head: loss became non-finite (learning rate too high?)");
    }
    if (report) report->epoch_losses.push_back(epoch_loss);
  }
  if (report) {
    report->final_loss = report->epoch_losses.empty() ? initial : report->epoch_losses.back();
  }
  return head;
}

// ---------------------------------------------------------------------------
// Calibration metrics

double central_z(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 0.5 * (1.0 + alpha));
}

double picp(std::span<const double> errors, std::span<const double> sigmas, double alpha) {
  if (errors.size() != sigmas.size()) throw Error(ErrorCode::LengthMismatch, "picp: length mismatch");
  if (errors.empty()) throw Error(ErrorCode::TooFewSamples, "picp: no samples");
  const double z = central_z(alpha);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw Error(ErrorCode::InvalidConfig, "picp: sigmas must be positive");
    if (std::abs(errors[i]) <= z * sigmas[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(errors.size());
}

std::vector<std::pair<double, double>> qq_export(std::span<const double> errors) {
  if (errors.size() < 2) throw Error(ErrorCode::TooFewSamples, "qq_export: need at least two samples");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : sorted) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(ErrorCode::TooFewSamples, "qq_export: degenerate sample (zero std)");

  const boost::math::normal_distribution<double> normal(mean, sd);
  std::vector<std::pair<double, double>> out;
  out.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    out.emplace_back(boost::math::quantile(normal, p), sorted[i]);
  }
  return out;
}

std::string CalibrationReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "alpha";
  for (const char* name : kComponentNames) os << ',' << name;
  os << '\n';
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    os << alphas[a];
    for (double v : picp[a]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

double CalibrationReport::at(double alpha, int component) const {
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (std::abs(alphas[a] - alpha) < 1e-12) return picp[a][static_cast<std::size_t>(component)];
  }
  throw Error(ErrorCode::InvalidConfig, "calibration report has no such alpha");
}

CalibrationReport calibration_report(const UncertaintyHead& head, std::span<const ErrorSample> samples,
                                     std::span<const double> alphas) {
  if (samples.empty()) throw Error(ErrorCode::TooFewSamples, "calibration_report: no samples");
  CalibrationReport rep;
  rep.samples = samples.size();
  rep.alphas.assign(alphas.begin(), alphas.end());

  std::array<std::vector<double>, 6> err, sig;
  for (const auto& s : samples) {
    const Vec6 var = head.predict(s.features, s.class_id).variances();
    Vec6 e;
    e << s.e_t, s.e_r;
    for (int i = 0; i < 6; ++i) {
      err[static_cast<std::size_t>(i)].push_back(e[i]);
      sig[static_cast<std::size_t>(i)].push_back(std::sqrt(var[i]));
    }
  }
  for (std::size_t i = 0; i < 6; ++i) {
    rep.mean_error[i] = std::accumulate(err[i].begin(), err[i].end(), 0.0) / static_cast<double>(samples.size());
  }
  for (double alpha : alphas) {
    std::array<double, 6> row{};
    for (std::size_t i = 0; i < 6; ++i) row[i] = picp(err[i], sig[i], alpha);
    rep.picp.push_back(row);
  }
  return rep;
}

std::pair<double, double> empirical_fixed_sigma(std::span<const ErrorSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "empirical_fixed_sigma: no samples");
  double t = 0.0;
  double r = 0.0;
  for (const auto& s : samples) {
    t += s.e_t.norm();
    r += s.e_r.norm();
  }
  const double n = static_cast<double>(samples.size());
  return {t / n, r / n};
}

}  // namespace aleanav
