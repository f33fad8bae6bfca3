#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "weakh/model/hh.hpp"
#include "weakh/model/input.hpp"

namespace weakh::ode {

struct OdePath {
  double dt = 0.0;
  std::size_t stride = 1;
  std::vector<double> t;
  std::vector<model::HHState> states;
  /// Steps where a gate left [0, 1] and was clamped, and the largest excursion.
  std::size_t clamp_events = 0;
  double max_clamp = 0.0;
};

/// One classical RK4 step of dV = (F + I(t)) dt, dx = d_x(v, x) dt.
model::HHState rk4_step(const model::HHState& s, double t, double dt, const model::InputSignal& input,
                        const model::HHParams& p = {});

/// Fixed-step RK4 from t = 0 to t_end, gates clamped to [0, 1] after each
/// step. Every `stride`-th state is stored (the last one always).
/// Throws ComputationError("divergence at t = ...") on non-finite states.
OdePath integrate_hh(const model::HHState& x0, const model::InputSignal& input, double t_end, double dt,
                     const model::HHParams& p = {}, std::size_t stride = 1);

/// The monotone window used to invert the balancing input.
inline constexpr double kWindowLo = -15.0;
inline constexpr double kWindowHi = 30.0;

/// Equilibrium (v_c, x_inf(v_c)) for constant input c: F_inf(v_c) + c = 0,
/// bisection to 1e-10 on the window. Throws ComputationError("no
/// equilibrium in monotone window") when c is outside the window's image.
model::HHState equilibrium_for_input(double c, const model::HHParams& p = {});

struct OrbitOptions {
  double dt = 0.01;
  double transient = 300.0;
  double hysteresis = 0.5;
  double rel_tol = 1e-3;
  std::size_t samples = 256;
  /// Crossings per period tried when matching intervals (bursting under
  /// periodic input can fire several spikes per period).
  std::size_t max_group = 4;
};

struct Orbit {
  double period = 0.0;
  /// States at phases k * period / samples, k = 0..samples-1; the first is
  /// on the section v = 0.
  std::vector<model::HHState> samples;
  std::vector<double> sample_times;
  model::HHState section_state;
  double section_time = 0.0;
  bool converged = false;
  double transient_discarded = 0.0;
  std::size_t crossings_per_period = 1;
  std::vector<double> crossing_times;
  std::string diagnostics;
};

/// Discards the transient, records v up-crossings of 0 (linear interpolation
/// between steps, hysteresis band +-0.5 mV) and declares convergence once
/// three successive periods agree within rel_tol.
/// Throws ComputationError("no spiking detected") without crossings.
Orbit detect_stable_orbit(const model::InputSignal& input, const model::HHState& x0, double max_time,
                          const OrbitOptions& opt = {}, const model::HHParams& p = {});

struct OrbitDeltaRow {
  double t = 0.0;  // phase time from the section crossing
  model::HHState state;
  double delta = 0.0;
};

struct NegativeWindow {
  bool found = false;
  std::size_t start = 0;   // first sample inside
  std::size_t length = 0;  // samples inside (cyclic)
  double fraction = 0.0;   // of the period, from interpolated edges
  double start_t = 0.0;
  double end_t = 0.0;
  double start_v = 0.0;
  double end_v = 0.0;
  bool start_rising = false;
  bool end_rising = false;
};

struct OrbitDeltaTable {
  std::vector<OrbitDeltaRow> rows;
  double max_abs = 0.0;
  double threshold = 0.0;
  NegativeWindow window;
  std::size_t peak_index = 0;
  /// min |Delta| / max |Delta| over the tenth of the period after the spike peak.
  double min_ratio_after_peak = 0.0;
};

/// Delta on the orbit samples and the longest cyclic run with
/// Delta < -0.1 max|Delta|.
OrbitDeltaTable delta_along_orbit(const Orbit& orbit);

/// CSV text t,v,n,m,h,delta.
std::string orbit_delta_csv(const OrbitDeltaTable& table);
/// CSV text t,v,n,m,h.
std::string ode_path_csv(const OdePath& path);

}  // namespace weakh::ode
