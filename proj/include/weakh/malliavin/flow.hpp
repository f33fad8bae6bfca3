#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/model/sde_system.hpp"

namespace weakh::malliavin {

/// Condition number of Y above which a sample is flagged.
inline constexpr double kIllConditioned = 1e12;

struct FlowOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  /// A sample is taken every `sample_every` steps (and at the last step).
  std::size_t sample_every = 100;
};

/// One path of X (the simulator's scheme, same stream as sde::simulate), the
/// Euler-Maruyama first-variation flow
///   Y_{n+1} = Y_n + db(t_n, X_n) Y_n dt + ds(X_n) Y_n dW_n,
/// and the increments dW_n.
struct FlowRun {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> X;
  std::vector<Eigen::MatrixXd> Y;
  std::vector<double> dW;
  /// The path left the working box and was stopped there.
  bool exited_box = false;
};

struct FlowSample {
  double t = 0.0;
  Eigen::VectorXd X;
  Eigen::MatrixXd Y;
  /// int_0^t Z s s^T Z^T du by the trapezoid rule, Z = Y^{-1}.
  Eigen::MatrixXd C;
  /// Y C Y^T.
  Eigen::MatrixXd sigma_mal;
  double lambda_min = 0.0;
  double det = 0.0;
  double condition = 1.0;
  bool ill_conditioned = false;
};

FlowRun run_flow(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const FlowOptions& opt);

/// Covariance samples along a run. `sys` supplies the diffusion s(X); it may
/// differ from the system that produced the run in its noise amplitude.
/// C is kept as a square-root factor R (C = R^T R) updated by QR, so
/// sigma_mal = (R Y^T)^T (R Y^T) is a Gram matrix and det >= 0 exactly.
std::vector<FlowSample> covariance_samples(const model::StochasticSystem& sys, const FlowRun& run,
                                           std::size_t sample_every);

struct FlowPath {
  FlowRun run;
  std::vector<FlowSample> samples;
};

FlowPath simulate_with_flow(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const FlowOptions& opt);

/// Integrates Z by its own Stratonovich equation
///   dZ = -Z db~ dt - Z ds o dW,  Z_0 = I
/// (Heun predictor-corrector on the stored increments) and returns
/// max_n |Z_n Y_n - I|_max.
double inverse_flow_consistency(const model::StochasticSystem& sys, const FlowRun& run);

struct DegeneracyRow {
  Eigen::VectorXd point;
  double delta = 0.0;
  double median_lambda_min = 0.0;
  double median_det = 0.0;
  std::size_t flagged = 0;
};

/// Per point: Delta from the internal-variable determinant, then medians of
/// lambda_min and det of sigma_mal at time t over n_paths paths.
std::vector<DegeneracyRow> degeneracy_scan(const model::StochasticSystem& sys, const std::vector<Eigen::VectorXd>& points,
                                           double t, std::size_t n_paths, double dt, std::uint64_t seed,
                                           unsigned threads = 1);

/// Rows t,lambda_min,det,condition.
std::string samples_csv(const std::vector<FlowSample>& samples);

double median(std::vector<double> values);

}  // namespace weakh::malliavin
