#include "weakh/ode/hh_ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weakh/hoermander/determinant.hpp"
#include "weakh/util/error.hpp"
#include "weakh/util/format.hpp"

namespace weakh::ode {

using model::HHState;

namespace {

HHState axpy(const HHState& s, double a, const HHState& d) {
  return {s.v + a * d.v, s.n + a * d.n, s.m + a * d.m, s.h + a * d.h};
}

bool finite(const HHState& s) {
  return std::isfinite(s.v) && std::isfinite(s.n) && std::isfinite(s.m) && std::isfinite(s.h);
}

struct ClampStats {
  std::size_t events = 0;
  double max = 0.0;
};

void clamp_gates(HHState& s, ClampStats& st) {
  for (double* g : {&s.n, &s.m, &s.h}) {
    double excess = 0.0;
    if (*g < 0.0) excess = -*g, *g = 0.0;
    else if (*g > 1.0) excess = *g - 1.0, *g = 1.0;
    if (excess > 0.0) {
      ++st.events;
      st.max = std::max(st.max, excess);
    }
  }
}

HHState advance(const HHState& s, double t, double dt, const model::InputSignal& input, const model::HHParams& p,
                ClampStats& st) {
  HHState next = rk4_step(s, t, dt, input, p);
  if (!finite(next)) throw ComputationError("divergence at t = " + util::format_double(t + dt));
  clamp_gates(next, st);
  return next;
}

}  // namespace

HHState rk4_step(const HHState& s, double t, double dt, const model::InputSignal& input, const model::HHParams& p) {
  const HHState k1 = model::hh_vector_field(s, input(t), p);
  const HHState k2 = model::hh_vector_field(axpy(s, 0.5 * dt, k1), input(t + 0.5 * dt), p);
  const HHState k3 = model::hh_vector_field(axpy(s, 0.5 * dt, k2), input(t + 0.5 * dt), p);
  const HHState k4 = model::hh_vector_field(axpy(s, dt, k3), input(t + dt), p);
  return {s.v + dt / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v), s.n + dt / 6.0 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n),
          s.m + dt / 6.0 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m), s.h + dt / 6.0 * (k1.h + 2 * k2.h + 2 * k3.h + k4.h)};
}

OdePath integrate_hh(const HHState& x0, const model::InputSignal& input, double t_end, double dt,
                     const model::HHParams& p, std::size_t stride) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_hh: dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("integrate_hh: t_end must be >= 0");
  if (stride == 0) throw std::invalid_argument("integrate_hh: stride must be >= 1");
  OdePath path;
  path.dt = dt;
  path.stride = stride;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  path.t.push_back(0.0);
  path.states.push_back(x0);
  ClampStats st;
  HHState s = x0;
  for (std::size_t i = 1; i <= steps; ++i) {
    s = advance(s, static_cast<double>(i - 1) * dt, dt, input, p, st);
    if (i % stride == 0 || i == steps) {
      path.t.push_back(static_cast<double>(i) * dt);
      path.states.push_back(s);
    }
  }
  path.clamp_events = st.events;
  path.max_clamp = st.max;
  return path;
}

HHState equilibrium_for_input(double c, const model::HHParams& p) {
  // F_inf(v) + c is decreasing on the window.
  const auto g = [&](double v) { return model::current_drift_at_rest(v, p) + c; };
  double lo = kWindowLo, hi = kWindowHi;
  const double glo = g(lo), ghi = g(hi);
  if (!std::isfinite(c) || !(glo > 0.0 && ghi < 0.0)) {
    if (glo == 0.0) return model::equilibrium_curve(lo);
    if (ghi == 0.0) return model::equilibrium_curve(hi);
    throw ComputationError("no equilibrium in monotone window");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return model::equilibrium_curve(0.5 * (lo + hi));
}

namespace {

// Section state on v = 0 inside the step from `prev` (time tp), by regula
// falsi on the partial step length.
std::pair<HHState, double> refine_crossing(const HHState& prev, double tp, double dt, const model::InputSignal& input,
                                           const model::HHParams& p) {
  double a = 0.0, b = dt;
  double fa = prev.v, fb = rk4_step(prev, tp, dt, input, p).v;
  HHState best = prev;
  double tb = 0.0;
  int side = 0;
  for (int it = 0; it < 60; ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    best = rk4_step(prev, tp, c, input, p);
    tb = c;
    const double fc = best.v;
    if (std::abs(fc) < 1e-12) break;
    if ((fc < 0.0) == (fa < 0.0)) {
      a = c, fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c, fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return {best, tp + tb};
}

}  // namespace

Orbit detect_stable_orbit(const model::InputSignal& input, const HHState& x0, double max_time, const OrbitOptions& opt,
                          const model::HHParams& p) {
  if (!(opt.dt > 0.0) || opt.samples < 2 || opt.max_group < 1) {
    throw std::invalid_argument("detect_stable_orbit: invalid options");
  }
  if (input.kind() == model::InputSignal::Kind::table) {
    throw std::invalid_argument("detect_stable_orbit: input must be constant or sinusoid");
  }
  Orbit orbit;
  orbit.transient_discarded = opt.transient;
  ClampStats st;
  HHState s = x0;
  double t = 0.0;
  std::size_t step = 0;
  const auto time_at = [&](std::size_t k) { return static_cast<double>(k) * opt.dt; };
  while (t < opt.transient && t < max_time) {
    s = advance(s, t, opt.dt, input, p, st);
    t = time_at(++step);
  }

  bool armed = s.v < -opt.hysteresis;
  HHState last_prev = s;
  double last_prev_t = 0.0;
  std::vector<double>& cross = orbit.crossing_times;
  while (t < max_time && !orbit.converged) {
    const HHState prev = s;
    const double tp = t;
    s = advance(s, t, opt.dt, input, p, st);
    t = time_at(++step);
    if (!armed && s.v < -opt.hysteresis) armed = true;
    if (armed && prev.v < 0.0 && s.v >= 0.0) {
      armed = false;
      cross.push_back(tp + opt.dt * (-prev.v) / (s.v - prev.v));
      last_prev = prev;
      last_prev_t = tp;
      const std::size_t n = cross.size();
      for (std::size_t g = 1; g <= opt.max_group && !orbit.converged; ++g) {
        if (n < 3 * g + 1) break;
        double P[3];
        for (std::size_t j = 0; j < 3; ++j) P[j] = cross[n - 1 - j * g] - cross[n - 1 - (j + 1) * g];
        const double mean = (P[0] + P[1] + P[2]) / 3.0;
        const double spread = std::max({P[0], P[1], P[2]}) - std::min({P[0], P[1], P[2]});
        if (spread <= opt.rel_tol * mean) {
          orbit.converged = true;
          orbit.period = mean;
          orbit.crossings_per_period = g;
        }
      }
    }
  }
  if (cross.size() < 2) throw ComputationError("no spiking detected");
  if (!orbit.converged) {
    const std::size_t n = cross.size();
    const std::size_t k = std::min<std::size_t>(3, n - 1);
    orbit.period = (cross[n - 1] - cross[n - 1 - k]) / static_cast<double>(k);
    orbit.diagnostics = "successive periods did not agree within " + util::format_double(opt.rel_tol) + " after " +
                        std::to_string(n) + " crossings";
  }

  auto [section, tc] = refine_crossing(last_prev, last_prev_t, opt.dt, input, p);
  orbit.section_state = section;
  orbit.section_time = tc;
  const double h = orbit.period / static_cast<double>(opt.samples);
  const auto sub = static_cast<std::size_t>(std::ceil(h / opt.dt - 1e-12));
  const double hs = h / static_cast<double>(sub);
  HHState x = section;
  double tt = tc;
  for (std::size_t k = 0; k < opt.samples; ++k) {
    orbit.samples.push_back(x);
    orbit.sample_times.push_back(static_cast<double>(k) * h);
    for (std::size_t j = 0; j < sub; ++j) {
      x = advance(x, tt, hs, input, p, st);
      tt += hs;
    }
  }
  return orbit;
}

OrbitDeltaTable delta_along_orbit(const Orbit& orbit) {
  if (!orbit.converged) throw std::invalid_argument("delta_along_orbit: orbit has not converged");
  OrbitDeltaTable tab;
  const std::size_t N = orbit.samples.size();
  if (N < 3) throw std::invalid_argument("delta_along_orbit: too few samples");
  for (std::size_t k = 0; k < N; ++k) {
    const auto& s = orbit.samples[k];
    const double d = hoermander::determinant_delta_hh(s.v, s.n, s.m, s.h).value;
    tab.rows.push_back({orbit.sample_times[k], s, d});
    tab.max_abs = std::max(tab.max_abs, std::abs(d));
  }
  tab.threshold = 0.1 * tab.max_abs;
  const double h = orbit.period / static_cast<double>(N);
  const auto inside = [&](std::size_t k) { return tab.rows[k % N].delta < -tab.threshold; };

  std::size_t best_start = 0, best_len = 0;
  bool all = true;
  for (std::size_t k = 0; k < N; ++k) all = all && inside(k);
  if (all) {
    best_len = N;
  } else {
    for (std::size_t k = 0; k < N; ++k) {
      if (!inside(k) || inside(k + N - 1)) continue;
      std::size_t len = 0;
      while (len < N && inside(k + len)) ++len;
      if (len > best_len) best_len = len, best_start = k;
    }
  }
  NegativeWindow& w = tab.window;
  if (best_len > 0) {
    w.found = true;
    w.start = best_start;
    w.length = best_len;
    if (best_len == N) {
      w.fraction = 1.0;
    } else {
      // Interpolated edges where Delta crosses -threshold.
      const std::size_t a0 = (best_start + N - 1) % N, a1 = best_start;
      const std::size_t b0 = (best_start + best_len - 1) % N, b1 = (best_start + best_len) % N;
      const auto edge = [&](std::size_t i0, std::size_t i1, double t0) {
        const double d0 = tab.rows[i0].delta, d1 = tab.rows[i1].delta;
        const double th = (d0 + tab.threshold) / (d0 - d1);
        const double v = tab.rows[i0].state.v + th * (tab.rows[i1].state.v - tab.rows[i0].state.v);
        return std::make_pair(t0 + th * h, v);
      };
      const auto [ts, vs] = edge(a0, a1, static_cast<double>(best_start) * h - h);
      const auto [te, ve] = edge(b0, b1, static_cast<double>(best_start + best_len - 1) * h);
      w.start_t = std::fmod(ts + orbit.period, orbit.period);
      w.end_t = std::fmod(te + orbit.period, orbit.period);
      w.start_v = vs;
      w.end_v = ve;
      w.start_rising = tab.rows[a1].state.v > tab.rows[a0].state.v;
      w.end_rising = tab.rows[b1].state.v > tab.rows[b0].state.v;
      w.fraction = (te - ts) / orbit.period;
    }
  }

  std::size_t peak = 0;
  for (std::size_t k = 1; k < N; ++k)
    if (tab.rows[k].state.v > tab.rows[peak].state.v) peak = k;
  tab.peak_index = peak;
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= N / 10; ++j) mn = std::min(mn, std::abs(tab.rows[(peak + j) % N].delta));
  tab.min_ratio_after_peak = tab.max_abs > 0.0 ? mn / tab.max_abs : 0.0;
  return tab;
}

std::string orbit_delta_csv(const OrbitDeltaTable& table) {
  std::string out = "t,v,n,m,h,delta\n";
  for (const auto& r : table.rows) {
    out += util::csv_row({r.t, r.state.v, r.state.n, r.state.m, r.state.h, r.delta});
    out += '\n';
  }
  return out;
}

std::string ode_path_csv(const OdePath& path) {
  std::string out = "t,v,n,m,h\n";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    const auto& s = path.states[i];
    out += util::csv_row({path.t[i], s.v, s.n, s.m, s.h});
    out += '\n';
  }
  return out;
}

}  // namespace weakh::ode
