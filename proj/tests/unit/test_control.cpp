#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "weakh/control/control.hpp"
#include "weakh/model/hh.hpp"
#include "weakh/ode/hh_ode.hpp"
#include "weakh/util/error.hpp"

using namespace weakh;
using model::InputSignal;
using model::NoiseSpec;

namespace {

std::shared_ptr<model::HodgkinHuxley> hh() { return std::make_shared<model::HodgkinHuxley>(); }

Eigen::VectorXd full_state(const model::HHState& s, double xi) {
  Eigen::VectorXd x(5);
  x << s.v, s.n, s.m, s.h, xi;
  return x;
}

model::StochasticSystem ou_system(double gamma = 1.0, double tau = 1.0, double S = 0.0) {
  return {hh(), NoiseSpec::ou(tau, gamma, InputSignal::constant(S))};
}

}  // namespace

TEST_CASE("smooth step") {
  CHECK(control::smooth_step(-1.0) == 0.0);
  CHECK(control::smooth_step(0.0) == 0.0);
  CHECK(control::smooth_step(1.0) == 1.0);
  CHECK(control::smooth_step(0.5) == doctest::Approx(0.5));
  for (double s = 0.01; s < 1.0; s += 0.01) {
    CHECK(control::smooth_step(s) + control::smooth_step(1.0 - s) == doctest::Approx(1.0));
    const double h = 1e-6;
    const double fd = (control::smooth_step(s + h) - control::smooth_step(s - h)) / (2 * h);
    CHECK(control::smooth_step_derivative(s) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(control::smooth_step_derivative(s) >= 0.0);
  }
}

TEST_CASE("ramp path reaches the equilibrium of the internal variables") {
  const auto sys = ou_system();
  const auto x0 = full_state(model::equilibrium_curve(0.0), 0.0);
  const double z1 = 8.0;
  double a_min = 1e9;
  for (auto g : model::kGates) {
    const double a = model::rate(model::alpha_of(g), z1) + model::rate(model::beta_of(g), z1);
    a_min = std::min(a_min, a);
  }
  const double t_end = 1.0 + 10.0 / a_min;
  const auto p = control::build_ramp_path(sys, x0, z1, t_end, 1e-3);
  const auto inf = model::steady_state(z1);
  const auto& z = p.Z.back();
  CHECK(z[0] == z1);
  CHECK(std::abs(z[1] - inf.n) < std::exp(-10.0));
  CHECK(std::abs(z[2] - inf.m) < std::exp(-10.0));
  CHECK(std::abs(z[3] - inf.h) < std::exp(-10.0));
  CHECK(p.admissible);

  // Exact exponential relaxation on [1, t_end] where the coefficients are frozen.
  std::size_t i1 = 0;
  while (p.t[i1] < 1.0 - 1e-12) ++i1;
  double worst = 0.0;
  for (std::size_t i = i1; i < p.t.size(); ++i) {
    const double dt = p.t[i] - p.t[i1];
    for (auto g : model::kGates) {
      const double a = model::rate(model::alpha_of(g), z1), b = model::rate(model::alpha_of(g), z1) + model::rate(model::beta_of(g), z1);
      const double y_inf = a / b;
      const auto r = static_cast<Eigen::Index>(static_cast<int>(g) + 1);
      const double exact = p.Z[i1][r] * std::exp(-b * dt) + y_inf * (1 - std::exp(-b * dt));
      worst = std::max(worst, std::abs(p.Z[i][r] - exact));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("ramp from the target equilibrium is constant") {
  const double z1 = 4.0;
  const auto s = model::equilibrium_curve(z1);
  const auto p = control::build_ramp_path(ou_system(), full_state(s, 2.0), z1, 3.0, 1e-3);
  for (const auto& z : p.Z) {
    CHECK(z[0] == z1);
    CHECK(std::abs(z[1] - s.n) < 1e-12);
    CHECK(std::abs(z[3] - s.h) < 1e-12);
  }
}

TEST_CASE("ramp control with constant sigma") {
  // For OU, sigma' = 0: hdot = (Z_m' - b_m) / sigma with Z_m' = gamma' - F(Z).
  const double gamma = 0.7, tau = 2.0, S = 1.5;
  const auto sys = ou_system(gamma, tau, S);
  const auto p = control::build_ramp_path(sys, full_state(model::equilibrium_curve(0.0), 0.0), 6.0, 3.0, 1e-3);
  const double sigma = gamma * std::sqrt(tau);
  for (std::size_t i = 10; i + 10 < p.Z.size(); i += 97) {
    const model::HHState st{p.Z[i][0], p.Z[i][1], p.Z[i][2], p.Z[i][3]};
    const double slope = (6.0 - p.x1) * control::smooth_step_derivative(p.t[i]) - model::current_drift(st);
    const double expect = (slope - (S - p.Z[i][4]) * tau) / sigma;
    CHECK(p.hdot[i] == doctest::Approx(expect).epsilon(1e-5));
  }
  CHECK_THROWS_AS(control::build_ramp_path(sys, full_state(model::equilibrium_curve(0.0), 0.0), 6.0, 1.0, 1e-3),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      control::build_ramp_path(ou_system(0.0), full_state(model::equilibrium_curve(0.0), 0.0), 6.0, 2.0, 1e-3),
      doctest::Contains("diffusion vanishes"), ComputationError);
}

TEST_CASE("ramp control with state-dependent sigma") {
  // CIR: compare hdot against the formula with a finite-difference sigma'.
  const double tau = 1.0, gamma = 1.0, K = 5.0;
  const model::StochasticSystem sys(hh(), NoiseSpec::cir(tau, gamma, K, InputSignal::constant(0.5)));
  const auto p = control::build_ramp_path(sys, full_state(model::equilibrium_curve(0.0), 0.5), 3.0, 2.0, 1e-3);
  const auto sigma = [&](double x) { return gamma * std::sqrt(std::max(x + K, 0.0)) * std::sqrt(tau); };
  for (std::size_t i = 5; i + 5 < p.Z.size(); i += 101) {
    const double xm = p.Z[i][4];
    const double ds = (sigma(xm + 1e-6) - sigma(xm - 1e-6)) / 2e-6;
    const model::HHState st{p.Z[i][0], p.Z[i][1], p.Z[i][2], p.Z[i][3]};
    const double slope = (3.0 - p.x1) * control::smooth_step_derivative(p.t[i]) - model::current_drift(st);
    const double expect = (slope - (0.5 - xm) * tau + 0.5 * sigma(xm) * ds) / sigma(xm);
    CHECK(p.hdot[i] == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("imitation path") {
  // I = 0, b_m = 0 (OU with S = xi0 = 0), constant sigma: hdot = 0 and the path is the free flow.
  const auto sys = ou_system(1.0, 1.0, 0.0);
  const model::HHState start{3.0, 0.3, 0.1, 0.6};
  const auto p = control::build_imitation_path(sys, full_state(start, 0.0), InputSignal::constant(0.0), 10.0, 1e-3);
  const auto ref = ode::integrate_hh(start, InputSignal::constant(0.0), 10.0, 1e-3);
  for (double h : p.hdot) CHECK(h == 0.0);
  CHECK(p.Z.back()[0] == doctest::Approx(ref.states.back().v).epsilon(1e-12));
  CHECK(p.Z.back()[4] == 0.0);

  // Periodic input in the regular regime: one tour of the orbit per period.
  const double a = 8.0, T = 20.0;
  const auto I = InputSignal::sinusoid(a, T);
  const auto warm = ode::integrate_hh(model::equilibrium_curve(0.0), I, 15 * T, 1e-3, {}, 1000000).states.back();
  const auto q = control::build_imitation_path(sys, full_state(warm, 0.0), I, T, 1e-3);
  const auto& z0 = q.Z.front();
  const auto& zT = q.Z.back();
  CHECK(std::abs(zT[0] - z0[0]) < 1e-2);
  CHECK(std::abs(zT[1] - z0[1]) < 1e-4);
  CHECK(zT[4] == doctest::Approx(a * T));
  double vmax = -1e9;
  for (const auto& z : q.Z) vmax = std::max(vmax, z[0]);
  CHECK(vmax > 80.0);

  // CIR: chi_m driven below -K.
  const model::StochasticSystem cir(hh(), NoiseSpec::cir(1.0, 1.0, 3.0, InputSignal::constant(0.0)));
  CHECK_THROWS_WITH_AS(control::build_imitation_path(cir, full_state(start, 0.0), InputSignal::constant(-1.0), 5.0, 1e-3),
                       doctest::Contains("admissibility violated"), ComputationError);
}

TEST_CASE("roundtrip through the controlled ODE") {
  const auto sys = ou_system(1.0, 1.0, 0.0);
  const auto x0 = full_state(model::equilibrium_curve(0.0), 0.0);
  std::vector<double> ramp_dev, imit_dev;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto r = control::build_ramp_path(sys, x0, 3.0, 20.0, dt);
    ramp_dev.push_back(control::verify_roundtrip(r, sys));
    const auto im = control::build_imitation_path(sys, x0, InputSignal::sinusoid(8.0, 20.0), 20.0, dt);
    imit_dev.push_back(control::verify_roundtrip(im, sys));
  }
  INFO("ramp " << ramp_dev[0] << " " << ramp_dev[1] << " " << ramp_dev[2]);
  INFO("imitation " << imit_dev[0] << " " << imit_dev[1] << " " << imit_dev[2]);
  CHECK(ramp_dev[2] < 1e-4);
  CHECK(imit_dev[2] < 1e-4);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(ramp_dev[i] < ramp_dev[i - 1]);
    CHECK(imit_dev[i] < imit_dev[i - 1]);
  }
  CHECK(std::log2(ramp_dev[1] / ramp_dev[2]) >= 2.0 - 0.1);
  CHECK(std::log2(imit_dev[1] / imit_dev[2]) >= 2.0 - 0.1);

  // Holding v above the Hopf point is unstable: errors grow like e^{1.5 t}.
  const auto hot = control::build_ramp_path(sys, x0, 10.0, 20.0, 1e-3);
  CHECK(control::verify_roundtrip(hot, sys) > 1.0);

  // Start at equilibrium with I = 0: nothing moves.
  const auto rest = control::build_imitation_path(sys, x0, InputSignal::constant(0.0), 10.0, 1e-3);
  CHECK(control::verify_roundtrip(rest, sys) < 1e-10);
}

TEST_CASE("tube probability") {
  const double tau = 1.0;
  const auto I = InputSignal::sinusoid(8.0, 20.0);
  const auto x0 = full_state(model::equilibrium_curve(0.0), 0.0);
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(tau, 0.1, control::matched_ou_signal(I, 0.0, tau, 10.0, 1e-3)));
  const auto path = control::build_imitation_path(sys, x0, I, 10.0, 1e-3);
  double hmax = 0.0;
  for (double h : path.hdot) hmax = std::max(hmax, std::abs(h));
  CHECK(hmax < 1e-9);
  mc::McOptions o;
  o.seed = 8;
  const auto w = mc::default_weights(sys);
  const auto big = control::tube_probability(path, sys, 1e6, w, 200, o);
  CHECK(big.probability == 1.0);
  const auto one = control::tube_probability(path, sys, 1.0, w, 1000, o);
  CHECK(one.ci_low > 0.0);
  const auto tiny = control::tube_probability(path, sys, 1e-4, w, 200, o);
  CHECK(tiny.probability == 0.0);
  double last = -1.0;
  for (double d : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    const auto e = control::tube_probability(path, sys, d, w, 300, o);
    CHECK(e.probability >= last);
    last = e.probability;
  }
  o.threads = 3;
  CHECK(control::tube_probability(path, sys, 0.05, w, 300, o).hits ==
        control::tube_probability(path, sys, 0.05, w, 300, mc::McOptions{.dt = 0.005, .seed = 8, .threads = 1}).hits);
}

TEST_CASE("control CSV") {
  const auto p = control::build_ramp_path(ou_system(), full_state(model::equilibrium_curve(0.0), 0.0), 1.0, 1.002, 1e-3);
  const auto csv = control::control_csv(p, {"v", "n", "m", "h", "xi"});
  CHECK(csv.rfind("t,v,n,m,h,xi,hdot\n0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1004);
}
