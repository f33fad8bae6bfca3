#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/mc/density.hpp"
#include "weakh/model/sde_system.hpp"

namespace weakh::control {

/// Smooth step: theta(s) = psi(s) / (psi(s) + psi(1 - s)), psi(s) = e^{-1/s}
/// for s > 0 and 0 otherwise. theta = 0 for s <= 0 and 1 for s >= 1.
double smooth_step(double s);
double smooth_step_derivative(double s);

/// A deterministic path Z on the grid t_k = k dt together with the control
/// hdot that makes the Stratonovich controlled ODE follow it.
struct ControlPath {
  std::string kind;
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> Z;
  std::vector<double> hdot;
  /// Ramp paths: gamma(s) = x_1 + (z1 - x_1) theta(s).
  double x1 = 0.0;
  double z1 = 0.0;
  /// Z_m stayed inside the input interval U at every grid point.
  bool admissible = true;
  double xi_min = 0.0;
  double xi_max = 0.0;

  double gamma(double s) const { return x1 + (z1 - x1) * smooth_step(s); }
};

/// Ramp to the voltage z1 over [0, 1], then hold:
///   Z_1 = gamma(s), dZ_m = C (gamma' - F(Z)) ds, Z_m(0) = x_m,
///   dY_i = (-a_i(gamma) Y_i + b_i(gamma)) ds   (RK4),
///   hdot = (C (gamma' - F) - b_m(s, Z_m) + sigma sigma'(Z_m) / 2) / sigma(Z_m).
/// Needs t_end > 1. Throws ComputationError("control undefined: diffusion
/// vanishes on path") when sigma(Z_m) < 1e-12.
ControlPath build_ramp_path(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double z1, double t_end,
                            double dt);

/// Follows the deterministic system with input I:
///   chi_m = x_m + int_0^s I, (v, p) solve the model with input I (RK4),
///   hdot = (I - b_m(s, chi_m) + sigma sigma'(chi_m) / 2) / sigma(chi_m).
/// Throws ComputationError("admissibility violated") when chi_m leaves U.
ControlPath build_imitation_path(const model::StochasticSystem& sys, const Eigen::VectorXd& x0,
                                 const model::InputSignal& I, double t_end, double dt);

/// Integrates dX = s(X) hdot(u) du + b~(u, X) du by RK4 on the path grid,
/// hdot interpolated linearly, and returns max_k |X_k - Z_k|_inf.
double verify_roundtrip(const ControlPath& path, const model::StochasticSystem& sys);

/// OU signal S(s) = chi_m(s) + I(s) / tau tabulated on the grid, for which
/// the OU drift along the imitation path equals I and hdot vanishes.
model::InputSignal matched_ou_signal(const model::InputSignal& I, double x_m, double tau, double t_end, double dt);

/// Fraction of SDE paths from Z_0 staying within weighted max-norm delta of
/// Z at every grid time (SDE step = path dt).
mc::HitEstimate tube_probability(const ControlPath& path, const model::StochasticSystem& sys, double delta,
                                 const Eigen::VectorXd& weights, std::size_t n_paths, const mc::McOptions& opt);

/// Rows t, Z_1..Z_m, hdot.
std::string control_csv(const ControlPath& path, const std::vector<std::string>& columns);

}  // namespace weakh::control
