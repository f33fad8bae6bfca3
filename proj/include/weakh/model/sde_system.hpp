#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "weakh/model/input.hpp"
#include "weakh/model/membrane_model.hpp"

namespace weakh::model {

/// Axis-aligned closed box in state space.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

/// The m = k + 2 dimensional SDE with internal variables and random input:
///
///   dv   = F(v, p) dt + (1/C) d xi
///   dp_i = (-a_i(v) p_i + b_i(v)) dt
///   d xi = b_m(t, xi) dt + sigma(xi) dW
///
/// Written in the one-noise form dX = b(t, X) dt + s(X) dW, the diffusion
/// field is s = sigma(xi) (1/C, 0, .., 0, 1).
class StochasticSystem {
 public:
  StochasticSystem(std::shared_ptr<const MembraneModel> model, NoiseSpec noise);

  const MembraneModel& model() const { return *model_; }
  std::shared_ptr<const MembraneModel> model_ptr() const { return model_; }
  const NoiseSpec& noise() const { return noise_; }
  std::size_t dimension() const { return model_->state_dimension(); }

  Eigen::VectorXd drift(double t, const Eigen::VectorXd& x) const;
  Eigen::VectorXd diffusion(const Eigen::VectorXd& x) const;
  /// b~_i = b_i - 1/2 sum_k s_k ds_i/dx_k.
  Eigen::VectorXd stratonovich_drift(double t, const Eigen::VectorXd& x) const;

  Eigen::MatrixXd drift_jacobian(double t, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd stratonovich_drift_jacobian(double t, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd diffusion_jacobian(const Eigen::VectorXd& x) const;

  /// Voltage in [-150, 250] mV (or the model's own range), gates in [0, 1],
  /// xi in the closure of U clipped to +-1e6.
  Box working_box() const;

  std::string fingerprint() const;

 private:
  double noise_drift_slope(double t, double xi) const;
  double sigma_dsigma_slope(double xi) const;

  std::shared_ptr<const MembraneModel> model_;
  NoiseSpec noise_;
};

}  // namespace weakh::model
