#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aleanav/geometry.hpp"
#include "aleanav/sim.hpp"

namespace aleanav {

/// s_i = ln sigma_i^2; translation first, then rotation.
using LogVariance = Vec6;

/// Camera-frame diagonal covariance of one pose measurement.
struct PredictedCovariance {
  DiagCov3 trans;  // m^2
  DiagCov3 rot;    // rad^2

  static PredictedCovariance from_log_variance(const LogVariance& s);
  static PredictedCovariance from_sigmas(double sigma_t, double sigma_rot);

  bool valid() const { return trans.valid() && rot.valid(); }
  Vec6 variances() const;
  /// Sum of the six variances; lower is more certain.
  double score() const { return trans.trace() + rot.trace(); }
};

struct LossWeights {
  double trans = 1.0;
  double rot = 1.0;
};

struct ErrorSample {
  Vec3 e_t = Vec3::Zero();  // measured - true translation, camera frame
  Vec3 e_r = Vec3::Zero();  // so3_log(R_true^T R_measured)
  FeatureVec features = FeatureVec::Zero();
  int class_id = 0;
};

ErrorSample make_error_sample(const MeasurementRecord& m);
std::vector<ErrorSample> make_error_samples(std::span<const MeasurementRecord> records);

/// 0.5 * sum_i (exp(-s_i) e_i^2 + s_i)
double nll_loss(const Vec3& e, const Vec3& s);
/// d nll_loss / d s_i = 0.5 (1 - exp(-s_i) e_i^2)
Vec3 nll_loss_gradient(const Vec3& e, const Vec3& s);

/// One-hidden-layer tanh perceptron mapping standardized features to 6 log
/// variances per class. Output rows [6c, 6c + 6) belong to class c.
class UncertaintyHead {
 public:
  static constexpr int kInputDim = 5;
  static constexpr double kMinLogVar = -20.0;
  static constexpr double kMaxLogVar = 10.0;

  UncertaintyHead() : UncertaintyHead(32, 1, 0) {}
  UncertaintyHead(int hidden, int num_classes, std::uint64_t seed);

  int hidden() const { return static_cast<int>(w1_.rows()); }
  int num_classes() const { return static_cast<int>(b2_.size() / 6); }
  std::size_t parameter_count() const;

  LogVariance log_variance(const FeatureVec& features, int class_id = 0) const;
  PredictedCovariance predict(const FeatureVec& features, int class_id = 0) const;

  void set_standardization(const FeatureVec& mean, const FeatureVec& scale);
  const FeatureVec& feature_mean() const { return mean_; }
  const FeatureVec& feature_scale() const { return scale_; }

  /// Flat parameter view in the order w1, b1, w2, b2 (row-major matrices).
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  /// Output-layer bias of one class; used for data-dependent initialization.
  void set_output_bias(int class_id, const LogVariance& bias);

  std::string to_json() const;
  static UncertaintyHead from_json(const std::string& text);

  bool operator==(const UncertaintyHead& other) const;

 private:
  friend double batch_loss_and_gradient(std::span<const ErrorSample>, const UncertaintyHead&,
                                        const LossWeights&, Eigen::VectorXd*);
  void check_class(int class_id) const;

  Eigen::MatrixXd w1_;  // hidden x 5
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;  // 6C x hidden
  Eigen::VectorXd b2_;
  FeatureVec mean_ = FeatureVec::Zero();
  FeatureVec scale_ = FeatureVec::Ones();
};

/// lambda_t mean(L_t) + lambda_r mean(L_r). Throws EmptyBatch.
double batch_loss(std::span<const ErrorSample> samples, const UncertaintyHead& head,
                  const LossWeights& w = {});
/// Same loss; fills the gradient w.r.t. UncertaintyHead::parameters() when
/// gradient is non-null.
double batch_loss_and_gradient(std::span<const ErrorSample> samples, const UncertaintyHead& head,
                               const LossWeights& w, Eigen::VectorXd* gradient);

struct TrainConfig {
  int hidden = 32;
  double learning_rate = 0.05;
  int epochs = 60;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;
  LossWeights weights;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

/// Initialization shared by train_head: standardization from the data, output
/// bias at the per-class log of the mean squared error.
UncertaintyHead initial_head(std::span<const ErrorSample> dataset, const TrainConfig& config);

/// Mini-batch gradient descent with a fixed step. Throws Divergence when the
/// loss turns non-finite, EmptyBatch on an empty dataset.
UncertaintyHead train_head(std::span<const ErrorSample> dataset, const TrainConfig& config,
                           TrainReport* report = nullptr);

/// Two-sided central-interval quantile Phi^-1((1 + alpha) / 2).
double central_z(double alpha);

/// Fraction of |error_d| <= z(alpha) sigma_d.
double picp(std::span<const double> errors, std::span<const double> sigmas, double alpha);

/// (theoretical, sample) quantile pairs against a Gaussian fitted by sample
/// mean and std, plotting positions (i - 0.5) / D.
std::vector<std::pair<double, double>> qq_export(std::span<const double> errors);

inline constexpr std::array<double, 4> kReportAlphas = {0.68, 0.90, 0.95, 0.99};
inline constexpr std::array<const char*, 6> kComponentNames = {"tx", "ty", "tz", "rx", "ry", "rz"};

struct CalibrationReport {
  std::vector<double> alphas;
  std::vector<std::array<double, 6>> picp;  // one row per alpha
  std::array<double, 6> mean_error{};
  std::size_t samples = 0;

  std::string to_csv() const;
  double at(double alpha, int component) const;
};

CalibrationReport calibration_report(const UncertaintyHead& head, std::span<const ErrorSample> samples,
                                     std::span<const double> alphas = kReportAlphas);

/// Empirical fixed sigmas: mean translation error norm and mean rotation
/// angle over the samples.
std::pair<double, double> empirical_fixed_sigma(std::span<const ErrorSample> samples);

}  // namespace aleanav
