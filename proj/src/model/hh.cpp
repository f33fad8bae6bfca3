#include "weakh/model/hh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "weakh/model/special.hpp"

namespace weakh::model {

void HHParams::validate() const {
  if (!(g_K > 0.0 && g_Na > 0.0 && g_L > 0.0)) {
    throw std::invalid_argument("HHParams: conductances must be positive");
  }
}

std::string to_string(Rate r) {
  switch (r) {
    case Rate::alpha_n: return "alpha_n";
    case Rate::beta_n: return "beta_n";
    case Rate::alpha_m: return "alpha_m";
    case Rate::beta_m: return "beta_m";
    case Rate::alpha_h: return "alpha_h";
    case Rate::beta_h: return "beta_h";
  }
  return "?";
}

std::string to_string(Gate g) {
  switch (g) {
    case Gate::n: return "n";
    case Gate::m: return "m";
    case Gate::h: return "h";
  }
  return "?";
}

Rate alpha_of(Gate g) {
  switch (g) {
    case Gate::n: return Rate::alpha_n;
    case Gate::m: return Rate::alpha_m;
    case Gate::h: return Rate::alpha_h;
  }
  return Rate::alpha_n;
}

Rate beta_of(Gate g) {
  switch (g) {
    case Gate::n: return Rate::beta_n;
    case Gate::m: return Rate::beta_m;
    case Gate::h: return Rate::beta_h;
  }
  return Rate::beta_n;
}

// alpha_n(v) = (0.1 - 0.01 v) / (exp(1 - 0.1 v) - 1) = 0.1 g(1 - 0.1 v)
// alpha_m(v) = (2.5 - 0.1 v) / (exp(2.5 - 0.1 v) - 1) = g(2.5 - 0.1 v)
// with g(x) = x / (e^x - 1).
double rate(Rate r, double v) {
  switch (r) {
    case Rate::alpha_n: return 0.1 * x_over_expm1(1.0 - 0.1 * v);
    case Rate::beta_n: return 0.125 * std::exp(-v / 80.0);
    case Rate::alpha_m: return x_over_expm1(2.5 - 0.1 * v);
    case Rate::beta_m: return 4.0 * std::exp(-v / 18.0);
    case Rate::alpha_h: return 0.07 * std::exp(-v / 20.0);
    case Rate::beta_h: return 1.0 / (std::exp(3.0 - 0.1 * v) + 1.0);
  }
  return 0.0;
}

Jet4 rate(Rate r, const Jet4& v) {
  switch (r) {
    case Rate::alpha_n: return 0.1 * x_over_expm1(1.0 - 0.1 * v);
    case Rate::beta_n: return 0.125 * exp(v * (-1.0 / 80.0));
    case Rate::alpha_m: return x_over_expm1(2.5 - 0.1 * v);
    case Rate::beta_m: return 4.0 * exp(v * (-1.0 / 18.0));
    case Rate::alpha_h: return 0.07 * exp(v * (-1.0 / 20.0));
    case Rate::beta_h: return 1.0 / (exp(3.0 - 0.1 * v) + 1.0);
  }
  return Jet4{};
}

double steady_state(Gate g, double v) {
  const double a = rate(alpha_of(g), v);
  const double b = rate(beta_of(g), v);
  return a / (a + b);
}

SteadyState steady_state(double v) {
  return {steady_state(Gate::n, v), steady_state(Gate::m, v), steady_state(Gate::h, v)};
}

HHState equilibrium_curve(double v) {
  const auto s = steady_state(v);
  return {v, s.n, s.m, s.h};
}

double gating_drift(Gate g, double v, double x) {
  const double a = rate(alpha_of(g), v);
  const double b = rate(beta_of(g), v);
  return -(a + b) * x + a;
}

Jet4 gating_drift(Gate g, const Jet4& v, double x) {
  const Jet4 a = rate(alpha_of(g), v);
  const Jet4 b = rate(beta_of(g), v);
  return a - (a + b) * x;
}

double current_drift(const HHState& s, const HHParams& p) {
  const double n2 = s.n * s.n;
  return -(p.g_K * n2 * n2 * (s.v - p.E_K) + p.g_Na * s.m * s.m * s.m * s.h * (s.v - p.E_Na) +
           p.g_L * (s.v - p.E_L));
}

double current_slope(const HHState& s, const HHParams& p) {
  const double n2 = s.n * s.n;
  return -(p.g_K * n2 * n2 + p.g_Na * s.m * s.m * s.m * s.h + p.g_L);
}

double current_drift_at_rest(double v, const HHParams& p) { return current_drift(equilibrium_curve(v), p); }

double balancing_input(double v, const HHParams& p) { return -current_drift_at_rest(v, p); }

HHState hh_vector_field(const HHState& s, double input, const HHParams& p) {
  return {current_drift(s, p) + input, gating_drift(Gate::n, s.v, s.n), gating_drift(Gate::m, s.v, s.m),
          gating_drift(Gate::h, s.v, s.h)};
}

HodgkinHuxley::HodgkinHuxley(HHParams params) : params_(params) { params_.validate(); }

double HodgkinHuxley::voltage_drift(double v, std::span<const double> p) const {
  return current_drift({v, p[0], p[1], p[2]}, params_);
}

double HodgkinHuxley::voltage_slope(std::span<const double> p) const {
  return current_slope({0.0, p[0], p[1], p[2]}, params_);
}

void HodgkinHuxley::voltage_gradient(double v, std::span<const double> p, std::span<double> grad) const {
  const double n = p[0], m = p[1], h = p[2];
  grad[0] = -4.0 * params_.g_K * n * n * n * (v - params_.E_K);
  grad[1] = -3.0 * params_.g_Na * m * m * h * (v - params_.E_Na);
  grad[2] = -params_.g_Na * m * m * m * (v - params_.E_Na);
}

void HodgkinHuxley::kinetics(double v, std::span<double> a, std::span<double> b) const {
  for (std::size_t i = 0; i < 3; ++i) {
    const Gate g = kGates[i];
    const double alpha = rate(alpha_of(g), v);
    a[i] = alpha + rate(beta_of(g), v);
    b[i] = alpha;
  }
}

void HodgkinHuxley::kinetics(const Jet4& v, std::span<Jet4> a, std::span<Jet4> b) const {
  for (std::size_t i = 0; i < 3; ++i) {
    const Gate g = kGates[i];
    const Jet4 alpha = rate(alpha_of(g), v);
    a[i] = alpha + rate(beta_of(g), v);
    b[i] = alpha;
  }
}

std::string HodgkinHuxley::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "hh-builtin g_K=" << params_.g_K << " g_Na=" << params_.g_Na << " g_L=" << params_.g_L
     << " E_K=" << params_.E_K << " E_Na=" << params_.E_Na << " E_L=" << params_.E_L;
  return os.str();
}

}  // namespace weakh::model
