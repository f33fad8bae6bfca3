#pragma once

#include <array>
#include <span>
#include <string>

#include "weakh/model/jet.hpp"
#include "weakh/model/membrane_model.hpp"

namespace weakh::model {

/// Hodgkin-Huxley constants in the shifted convention (rest near 0 mV).
/// Conductances in mS/cm^2, reversal potentials in mV.
struct HHParams {
  double g_K = 36.0;
  double g_Na = 120.0;
  double g_L = 0.3;
  double E_K = -12.0;
  double E_Na = 120.0;
  double E_L = 10.6;

  void validate() const;
};

struct HHState {
  double v = 0.0;
  double n = 0.0;
  double m = 0.0;
  double h = 0.0;

  std::array<double, 3> gates() const { return {n, m, h}; }
};

enum class Gate { n = 0, m = 1, h = 2 };
inline constexpr std::array<Gate, 3> kGates = {Gate::n, Gate::m, Gate::h};

enum class Rate { alpha_n, beta_n, alpha_m, beta_m, alpha_h, beta_h };
inline constexpr std::array<Rate, 6> kRates = {Rate::alpha_n, Rate::beta_n, Rate::alpha_m,
                                               Rate::beta_m,  Rate::alpha_h, Rate::beta_h};

std::string to_string(Rate r);
std::string to_string(Gate g);
Rate alpha_of(Gate g);
Rate beta_of(Gate g);

double rate(Rate r, double v);
Jet4 rate(Rate r, const Jet4& v);

struct SteadyState {
  double n = 0.0;
  double m = 0.0;
  double h = 0.0;
};

/// x_inf(v) = alpha_x / (alpha_x + beta_x).
SteadyState steady_state(double v);
double steady_state(Gate g, double v);

/// Point (v, n_inf(v), m_inf(v), h_inf(v)) of the equilibrium curve.
HHState equilibrium_curve(double v);

/// Gating drift d_x(v, x) = -a_x(v) x + b_x(v), a_x = alpha + beta, b_x = alpha.
double gating_drift(Gate g, double v, double x);
Jet4 gating_drift(Gate g, const Jet4& v, double x);

/// Current-balance drift F(v, n, m, h) (mV/ms).
double current_drift(const HHState& s, const HHParams& p = {});

/// dF/dv = -(g_K n^4 + g_Na m^3 h + g_L).
double current_slope(const HHState& s, const HHParams& p = {});

/// F along the equilibrium curve.
double current_drift_at_rest(double v, const HHParams& p = {});

/// Constant input that makes (v, x_inf(v)) an equilibrium: c = -F_inf(v).
double balancing_input(double v, const HHParams& p = {});

/// Time derivative of the deterministic system with input current `input`.
HHState hh_vector_field(const HHState& s, double input, const HHParams& p = {});

/// Built-in Hodgkin-Huxley model with hand-written rate functions.
class HodgkinHuxley final : public MembraneModel {
 public:
  explicit HodgkinHuxley(HHParams params = {});

  const HHParams& params() const { return params_; }

  std::size_t channel_count() const override { return 3; }
  double capacitance() const override { return 1.0; }
  double voltage_drift(double v, std::span<const double> p) const override;
  double voltage_slope(std::span<const double> p) const override;
  void voltage_gradient(double v, std::span<const double> p, std::span<double> grad) const override;
  void kinetics(double v, std::span<double> a, std::span<double> b) const override;
  void kinetics(const Jet4& v, std::span<Jet4> a, std::span<Jet4> b) const override;
  std::string fingerprint() const override;

 private:
  HHParams params_;
};

}  // namespace weakh::model
