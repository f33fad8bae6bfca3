#include "weakh/control/control.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "weakh/sde/simulate.hpp"
#include "weakh/util/error.hpp"
#include "weakh/util/format.hpp"
#include "weakh/util/parallel.hpp"

namespace weakh::control {

namespace {

double psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double dpsi(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

constexpr double kSigmaFloor = 1e-12;

std::size_t grid_steps(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("control: dt must be > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("control: t_end must be > 0");
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  if (n == 0) throw std::invalid_argument("control: t_end shorter than one step");
  return n;
}

void check_state(const model::StochasticSystem& sys, const Eigen::VectorXd& x0) {
  if (static_cast<std::size_t>(x0.size()) != sys.dimension())
    throw std::invalid_argument("control: initial state has the wrong dimension");
}

double control_value(const model::StochasticSystem& sys, double s, double xm, double target_rate) {
  const auto& noise = sys.noise();
  const double sig = noise.sigma(xm);
  if (!(std::abs(sig) >= kSigmaFloor)) throw ComputationError("control undefined: diffusion vanishes on path");
  return (target_rate - noise.drift(s, xm) + 0.5 * sig * noise.dsigma(xm)) / sig;
}

template <class Rhs>
Eigen::VectorXd rk4(const Rhs& f, double s, double h, const Eigen::VectorXd& u) {
  const Eigen::VectorXd k1 = f(s, u);
  const Eigen::VectorXd k2 = f(s + 0.5 * h, u + 0.5 * h * k1);
  const Eigen::VectorXd k3 = f(s + 0.5 * h, u + 0.5 * h * k2);
  const Eigen::VectorXd k4 = f(s + h, u + h * k3);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void track_xi(ControlPath& p, double xi, const model::Interval& U) {
  p.xi_min = std::min(p.xi_min, xi);
  p.xi_max = std::max(p.xi_max, xi);
  if (!U.contains(xi)) p.admissible = false;
}

}  // namespace

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = psi(s), b = psi(1.0 - s);
  return a / (a + b);
}

double smooth_step_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = psi(s), b = psi(1.0 - s);
  const double d = a + b;
  return (dpsi(s) * b + a * dpsi(1.0 - s)) / (d * d);
}

ControlPath build_ramp_path(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double z1, double t_end,
                            double dt) {
  if (!(t_end > 1.0)) throw std::invalid_argument("build_ramp_path: t_end must exceed the ramp length 1");
  check_state(sys, x0);
  const std::size_t n = grid_steps(t_end, dt);
  const auto& model = sys.model();
  const std::size_t k = model.channel_count();
  const auto m = static_cast<Eigen::Index>(k + 2);
  const double C = model.capacitance();
  const auto U = sys.noise().state_interval();

  ControlPath p;
  p.kind = "ramp";
  p.dt = dt;
  p.x1 = x0[0];
  p.z1 = z1;
  p.xi_min = p.xi_max = x0[m - 1];

  std::vector<double> a(k), b(k);
  // u = (Y_1..Y_k, Z_m)
  auto rhs = [&](double s, const Eigen::VectorXd& u) {
    const double v = p.gamma(s);
    model.kinetics(v, a, b);
    Eigen::VectorXd du(u.size());
    for (std::size_t i = 0; i < k; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      du[r] = -a[i] * u[r] + b[i];
    }
    const double F = model.voltage_drift(v, std::span<const double>(u.data(), k));
    du[static_cast<Eigen::Index>(k)] = C * ((z1 - p.x1) * smooth_step_derivative(s) - F);
    return du;
  };
  auto record = [&](double s, const Eigen::VectorXd& u) {
    Eigen::VectorXd z(m);
    z[0] = p.gamma(s);
    z.segment(1, static_cast<Eigen::Index>(k)) = u.head(static_cast<Eigen::Index>(k));
    z[m - 1] = u[static_cast<Eigen::Index>(k)];
    const Eigen::VectorXd du = rhs(s, u);
    track_xi(p, z[m - 1], U);
    p.t.push_back(s);
    p.hdot.push_back(control_value(sys, s, z[m - 1], du[static_cast<Eigen::Index>(k)]));
    p.Z.push_back(std::move(z));
  };

  Eigen::VectorXd u(static_cast<Eigen::Index>(k + 1));
  u.head(static_cast<Eigen::Index>(k)) = x0.segment(1, static_cast<Eigen::Index>(k));
  u[static_cast<Eigen::Index>(k)] = x0[m - 1];
  p.t.reserve(n + 1);
  record(0.0, u);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dt * static_cast<double>(i);
    u = rk4(rhs, s, dt, u);
    if (!u.allFinite()) throw ComputationError("divergence at t = " + util::format_double(s + dt));
    record(dt * static_cast<double>(i + 1), u);
  }
  return p;
}

ControlPath build_imitation_path(const model::StochasticSystem& sys, const Eigen::VectorXd& x0,
                                 const model::InputSignal& I, double t_end, double dt) {
  check_state(sys, x0);
  const std::size_t n = grid_steps(t_end, dt);
  const auto& model = sys.model();
  const std::size_t k = model.channel_count();
  const auto m = static_cast<Eigen::Index>(k + 2);
  const double C = model.capacitance();
  const auto U = sys.noise().state_interval();
  const double xm = x0[m - 1];

  ControlPath p;
  p.kind = "imitation";
  p.dt = dt;
  p.xi_min = p.xi_max = xm;

  auto chi = [&](double s) { return xm + I.integral(0.0, s); };
  // Check chi_m on the grid and at the half steps.
  for (std::size_t i = 0; i <= 2 * n; ++i) {
    const double s = 0.5 * dt * static_cast<double>(i);
    if (!U.contains(chi(s))) throw ComputationError("admissibility violated at t = " + util::format_double(s));
  }

  std::vector<double> a(k), b(k);
  // u = (v, Y_1..Y_k)
  auto rhs = [&](double s, const Eigen::VectorXd& u) {
    model.kinetics(u[0], a, b);
    const std::span<const double> y(u.data() + 1, k);
    Eigen::VectorXd du(u.size());
    du[0] = model.voltage_drift(u[0], y) + I(s) / C;
    for (std::size_t i = 0; i < k; ++i) {
      const auto r = static_cast<Eigen::Index>(i + 1);
      du[r] = -a[i] * u[r] + b[i];
    }
    return du;
  };
  auto record = [&](double s, const Eigen::VectorXd& u) {
    Eigen::VectorXd z(m);
    z.head(static_cast<Eigen::Index>(k + 1)) = u;
    z[m - 1] = chi(s);
    track_xi(p, z[m - 1], U);
    p.t.push_back(s);
    p.hdot.push_back(control_value(sys, s, z[m - 1], I(s)));
    p.Z.push_back(std::move(z));
  };

  Eigen::VectorXd u = x0.head(static_cast<Eigen::Index>(k + 1));
  p.t.reserve(n + 1);
  record(0.0, u);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dt * static_cast<double>(i);
    u = rk4(rhs, s, dt, u);
    if (!u.allFinite()) throw ComputationError("divergence at t = " + util::format_double(s + dt));
    record(dt * static_cast<double>(i + 1), u);
  }
  return p;
}

double verify_roundtrip(const ControlPath& path, const model::StochasticSystem& sys) {
  if (path.Z.empty()) return 0.0;
  if (!path.admissible) throw std::invalid_argument("verify_roundtrip: path is not admissible");
  const double h = path.dt;
  Eigen::VectorXd x = path.Z.front();
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < path.Z.size(); ++i) {
    const double s = path.t[i];
    const double h0 = path.hdot[i], h1 = path.hdot[i + 1], hm = 0.5 * (h0 + h1);
    auto f = [&](double u, const Eigen::VectorXd& y, double c) -> Eigen::VectorXd {
      return sys.diffusion(y) * c + sys.stratonovich_drift(u, y);
    };
    const Eigen::VectorXd k1 = f(s, x, h0);
    const Eigen::VectorXd k2 = f(s + 0.5 * h, x + 0.5 * h * k1, hm);
    const Eigen::VectorXd k3 = f(s + 0.5 * h, x + 0.5 * h * k2, hm);
    const Eigen::VectorXd k4 = f(s + h, x + h * k3, h1);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    worst = std::max(worst, (x - path.Z[i + 1]).cwiseAbs().maxCoeff());
  }
  return worst;
}

model::InputSignal matched_ou_signal(const model::InputSignal& I, double x_m, double tau, double t_end, double dt) {
  if (!(tau > 0.0)) throw std::invalid_argument("matched_ou_signal: tau must be > 0");
  const std::size_t n = grid_steps(t_end, dt);
  std::vector<double> ts(n + 1), vs(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = dt * static_cast<double>(i);
    ts[i] = s;
    vs[i] = x_m + I.integral(0.0, s) + I(s) / tau;
  }
  return model::InputSignal::table(std::move(ts), std::move(vs));
}

mc::HitEstimate tube_probability(const ControlPath& path, const model::StochasticSystem& sys, double delta,
                                 const Eigen::VectorXd& weights, std::size_t n_paths, const mc::McOptions& opt) {
  if (!(delta > 0.0)) throw std::invalid_argument("tube_probability: delta must be > 0");
  if (n_paths == 0) throw std::invalid_argument("tube_probability: n_paths must be > 0");
  if (path.Z.empty()) throw std::invalid_argument("tube_probability: empty path");
  if (static_cast<std::size_t>(weights.size()) != sys.dimension() || !(weights.array() > 0.0).all())
    throw std::invalid_argument("tube_probability: weights must be positive");
  const std::size_t steps = path.Z.size() - 1;
  std::vector<char> inside(n_paths, 0);
  util::parallel_for(n_paths, opt.threads, [&](std::size_t i) {
    sde::SimOptions so;
    so.dt = path.dt;
    so.t_end = path.dt * static_cast<double>(steps);
    so.seed = opt.seed;
    so.path_index = i;
    bool ok = true;
    sde::simulate_observed(sys, path.Z.front(), so, [&](std::size_t idx, double, std::span<const double> x) {
      const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
      if (mc::weighted_distance(xv, path.Z[idx], weights) >= delta) ok = false;
      return ok;
    });
    inside[i] = ok ? 1 : 0;
  });
  std::size_t hits = 0;
  for (char c : inside) hits += static_cast<std::size_t>(c);
  mc::HitEstimate e;
  e.n_paths = n_paths;
  e.hits = hits;
  e.probability = static_cast<double>(hits) / static_cast<double>(n_paths);
  const auto w = mc::wilson_interval(hits, n_paths);
  e.ci_low = w.low;
  e.ci_high = w.high;
  e.t = path.t.back();
  e.epsilon = delta;
  e.target = path.Z.back();
  e.weights = weights;
  return e;
}

std::string control_csv(const ControlPath& path, const std::vector<std::string>& columns) {
  std::vector<std::string> head{"t"};
  head.insert(head.end(), columns.begin(), columns.end());
  head.push_back("hdot");
  std::string out = util::csv_row(head) + '\n';
  for (std::size_t i = 0; i < path.Z.size(); ++i) {
    std::vector<double> row{path.t[i]};
    for (Eigen::Index j = 0; j < path.Z[i].size(); ++j) row.push_back(path.Z[i][j]);
    row.push_back(path.hdot[i]);
    out += util::csv_row(row) + '\n';
  }
  return out;
}

}  // namespace weakh::control
