// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance c03 c07    run a subset
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/cli/cli.hpp"
#include "weakh/control/control.hpp"
#include "weakh/hoermander/brackets.hpp"
#include "weakh/hoermander/determinant.hpp"
#include "weakh/malliavin/flow.hpp"
#include "weakh/mc/density.hpp"
#include "weakh/model/hh.hpp"
#include "weakh/model/special.hpp"
#include "weakh/ode/hh_ode.hpp"
#include "weakh/sde/simulate.hpp"

using namespace weakh;
using model::InputSignal;
using model::NoiseSpec;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::shared_ptr<model::HodgkinHuxley> hh() { return std::make_shared<model::HodgkinHuxley>(); }

Eigen::VectorXd full(const model::HHState& s, double xi) {
  Eigen::VectorXd x(5);
  x << s.v, s.n, s.m, s.h, xi;
  return x;
}

// ---------------------------------------------------------------- 1..4

void c01(Verdict& v) {
  const double c = model::balancing_input(0.0);
  const double F = model::current_drift_at_rest(0.0);
  v.detail << "c = -F_inf(0) = " << c << ", F(0, x_inf(0)) = " << F << "; ";
  v.require(std::abs(c - (-0.0534)) <= 0.001, "c within -0.0534 +- 0.001");
}

void c02(Verdict& v) {
  const auto s = model::equilibrium_curve(0.0);
  const auto d = hoermander::determinant_delta_hh(s.v, s.n, s.m, s.h);
  v.detail << "Delta(rest) = " << d.value << "; ";
  v.require(d.value < 0.0, "Delta < 0 at rest");
}

void c03(Verdict& v) {
  const auto scan = hoermander::scan_delta_equilibrium(-15.0, 30.0, 0.01);
  v.detail << scan.zeros.size() << " sign change(s) at";
  for (double z : scan.zeros) v.detail << ' ' << z;
  v.detail << "; ";
  v.require(scan.zeros.size() == 2, "exactly two sign changes");
  if (scan.zeros.size() == 2) {
    v.require(std::abs(scan.zeros[0] - (-11.4796)) <= 0.01, "first zero -11.4796 +- 0.01");
    v.require(std::abs(scan.zeros[1] - 10.3444) <= 0.01, "second zero 10.3444 +- 0.01");
  }
}

void c04(Verdict& v) {
  const double lo = std::abs(model::balancing_input(-10.0)), hi = std::abs(model::balancing_input(10.0));
  v.detail << "|F_inf(-10)| = " << lo << ", |F_inf(10)| = " << hi << "; ";
  v.require(std::abs(lo - 6.15) <= 0.02, "6.15 +- 0.02");
  v.require(std::abs(hi - 26.61) <= 0.02, "26.61 +- 0.02");
}

// ---------------------------------------------------------------- 5

void c05(Verdict& v) {
  const auto orbit = ode::detect_stable_orbit(InputSignal::constant(15.0), model::equilibrium_curve(0.0), 600.0);
  const auto tab = ode::delta_along_orbit(orbit);
  const auto& w = tab.window;
  v.detail << "period " << orbit.period << " ms, window fraction " << w.fraction << ", start v " << w.start_v
           << (w.start_rising ? " (rising)" : " (falling)") << ", end v " << w.end_v
           << (w.end_rising ? " (rising)" : " (falling)") << ", min|Delta|/max after peak " << tab.min_ratio_after_peak
           << "; ";
  v.require(orbit.converged, "orbit converged");
  v.require(std::abs(orbit.period - 12.56) <= 0.15, "period 12.56 +- 0.15");
  v.require(w.found && w.fraction >= 0.25 && w.fraction <= 0.45, "window covers 25-45% of the period");
  v.require(w.start_rising && std::abs(w.start_v - (-2.0)) <= 1.0, "window starts at the rising -2 mV crossing +- 1");
  v.require(w.end_rising && std::abs(w.end_v - 5.0) <= 1.0, "window ends at the rising +5 mV crossing +- 1");
  v.require(tab.min_ratio_after_peak <= 0.1, "Delta within 10% of zero after the spike peak");
}

// ---------------------------------------------------------------- 6

void c06(Verdict& v) {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 5.0, InputSignal::constant(10.0)));
  const auto x0 = full(model::equilibrium_curve(0.0), 0.0);
  std::size_t outside = 0, clamps = 0, steps = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    sde::SimOptions o;
    o.t_end = 1e4 * o.dt;
    o.seed = 606;
    o.path_index = i;
    const auto stats = sde::simulate_observed(sys, x0, o, [&](std::size_t, double, std::span<const double> x) {
      for (std::size_t g = 1; g <= 3; ++g)
        if (!(x[g] >= 0.0 && x[g] <= 1.0)) ++outside;
      return true;
    });
    clamps += stats.clamp_events;
    steps += stats.steps;
  }
  v.detail << steps << " steps over 100 paths, " << outside << " gate values outside [0,1], " << clamps
           << " clamp events; ";
  v.require(steps == 100 * 10000, "10^4 steps per run");
  v.require(outside == 0, "gates in [0,1]");
  v.require(clamps == 0, "no clamping events");
}

// ---------------------------------------------------------------- 7

// Independent long-double rates, with the series of x/(e^x-1) near 0.
long double g_ld(long double x) {
  if (std::fabs(x) < 1e-3L) return 1 - x / 2 + x * x / 12 - x * x * x * x / 720 + x * x * x * x * x * x / 30240;
  return x / std::expm1(x);
}

long double rate_ld(model::Rate r, long double v) {
  using model::Rate;
  switch (r) {
    case Rate::alpha_n: return 0.1L * g_ld(1 - 0.1L * v);
    case Rate::beta_n: return 0.125L * std::exp(-v / 80);
    case Rate::alpha_m: return g_ld(2.5L - 0.1L * v);
    case Rate::beta_m: return 4 * std::exp(-v / 18);
    case Rate::alpha_h: return 0.07L * std::exp(-v / 20);
    case Rate::beta_h: return 1 / (std::exp(3 - 0.1L * v) + 1);
  }
  return 0;
}

long double stencil(model::Rate r, long double x, int k, long double h) {
  const auto f = [r](long double y) { return rate_ld(r, y); };
  switch (k) {
    case 1: return (f(x + h) - f(x - h)) / (2 * h);
    case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    case 3: return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
    case 4: return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / (h * h * h * h);
  }
  return 0;
}

double fd_derivative(model::Rate r, double v, int k) {
  constexpr int levels = 4;
  long double T[levels][levels];
  long double h = 2.0L;
  for (int i = 0; i < levels; ++i, h /= 2) {
    T[i][0] = stencil(r, v, k, h);
    long double p = 4;
    for (int j = 1; j <= i; ++j, p *= 4) T[i][j] = (p * T[i][j - 1] - T[i - 1][j - 1]) / (p - 1);
  }
  return static_cast<double>(T[levels - 1][levels - 1]);
}

// Taylor coefficients of x/(e^x-1) at 0 (Bernoulli numbers / k!), for the guard band.
double series_derivative(model::Rate r, double v, int k) {
  static const double b[] = {1.0, -0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 30240.0, 0.0, -1.0 / 1209600.0,
                             0.0, 1.0 / 47900160.0};
  const double scale = r == model::Rate::alpha_n ? 0.1 : 1.0;
  const double x = r == model::Rate::alpha_n ? 1.0 - 0.1 * v : 2.5 - 0.1 * v;
  // d^k/dv^k g(x(v)) = (-0.1)^k g^(k)(x); g^(k)(x) from the truncated series.
  double gk = 0.0;
  for (int j = k; j <= 10; ++j) {
    double fall = 1.0;
    for (int q = 0; q < k; ++q) fall *= j - q;
    gk += b[j] * fall * std::pow(x, j - k);
  }
  return scale * std::pow(-0.1, k) * gk;
}

void c07(Verdict& v) {
  std::mt19937_64 gen(7007);
  std::uniform_real_distribution<double> U(-20.0, 110.0);
  double worst = 0.0;
  int band = 0, compared = 0;
  std::vector<double> vs;
  for (int i = 0; i < 100; ++i) vs.push_back(U(gen));
  // Guard-band points: the removable singularities of alpha_n and alpha_m.
  for (double c : {10.0, 25.0})
    for (double d : {0.0, 1e-9, -3e-4, 2e-2}) vs.push_back(c + d);
  for (double x : vs) {
    for (model::Rate r : model::kRates) {
      const auto j = model::rate(r, model::Jet4::variable(x));
      const bool singular_rate = r == model::Rate::alpha_n || r == model::Rate::alpha_m;
      const double arg = r == model::Rate::alpha_n ? 1.0 - 0.1 * x : 2.5 - 0.1 * x;
      const bool in_band = singular_rate && std::abs(arg) < 0.05;
      band += in_band ? 1 : 0;
      for (int k = 1; k <= 4; ++k) {
        const double ref = in_band ? series_derivative(r, x, k) : fd_derivative(r, x, k);
        const double jd = j.derivative(static_cast<std::size_t>(k));
        const double err = std::abs(jd - ref) / std::max(std::abs(ref), 1e-300);
        worst = std::max(worst, err);
        ++compared;
      }
    }
  }
  v.detail << compared << " derivative comparisons (" << band << " rate evaluations in the guard band), max rel err "
           << worst << "; ";
  v.require(worst < 1e-6, "relative error < 1e-6");
}

// ---------------------------------------------------------------- 8

double delta_at(const Eigen::VectorXd& x) { return hoermander::determinant_delta_hh(x[0], x[1], x[2], x[3]).value; }

// Delta is affine in each gate: solve Delta = 0 for one of them inside (0,1).
bool make_collinear(Eigen::VectorXd& x) {
  for (int g = 3; g >= 1; --g) {
    Eigen::VectorXd a = x, b = x;
    a[g] = 0.0;
    b[g] = 1.0;
    const double da = delta_at(a), db = delta_at(b);
    if (da == db) continue;
    const double p = da / (da - db);
    if (p > 0.02 && p < 0.98) {
      x[g] = p;
      return true;
    }
  }
  return false;
}

void c08(Verdict& v) {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 1.0, InputSignal::constant(0.0)));
  std::mt19937_64 gen(808);
  std::uniform_real_distribution<double> V(-15.0, 40.0), P(0.05, 0.95), X(-5.0, 5.0);
  int accepted = 0, positive = 0, engineered = 0, ordered = 0;
  double worst_ratio = 0.0, min_lambda = INFINITY;
  while (accepted < 50) {
    Eigen::VectorXd x(5);
    x << V(gen), P(gen), P(gen), P(gen), X(gen);
    const auto d = hoermander::determinant_delta_hh(x[0], x[1], x[2], x[3]);
    if (std::abs(d.value) <= 1e-3 * d.scale) continue;
    ++accepted;
    const double lam = hoermander::numeric_brackets(sys, 0.0, x, 4).lambda_min;
    min_lambda = std::min(min_lambda, lam);
    positive += lam > 0.0 ? 1 : 0;
    Eigen::VectorXd y = x;
    if (!make_collinear(y)) continue;
    ++engineered;
    const double lam0 = hoermander::numeric_brackets(sys, 0.0, y, 4).lambda_min;
    const double ratio = lam0 / lam;
    worst_ratio = std::max(worst_ratio, ratio);
    ordered += ratio <= 1e-3 ? 1 : 0;
  }
  v.detail << positive << "/50 states with lambda_min > 0 (min " << min_lambda << "), " << ordered << "/" << engineered
           << " collinear states >= 1e3 times smaller (worst ratio " << worst_ratio << "); ";
  v.require(positive == 50, "lambda_min > 0 on all sampled states");
  v.require(engineered >= 25, "at least 25 collinear states constructed");
  v.require(ordered == engineered, "collinear lambda_min at least 1e3 times smaller");
}

// ---------------------------------------------------------------- 9

void c09(Verdict& v) {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 1.0, InputSignal::constant(0.0)));
  const auto x0 = full(model::equilibrium_curve(0.0), 0.0);
  auto check = [&](const std::string& name, const std::function<control::ControlPath(double)>& build) {
    const double d1 = control::verify_roundtrip(build(1e-3), sys);
    const double d2 = control::verify_roundtrip(build(5e-4), sys);
    const double order = std::log2(d1 / d2);
    v.detail << name << ": dev(1e-3) " << d1 << ", dev(5e-4) " << d2 << ", order " << order << "; ";
    v.require(d1 < 1e-4, name + " deviation < 1e-4");
    v.require(order >= 2.0, name + " order >= 2");
  };
  check("ramp z1=3", [&](double dt) { return control::build_ramp_path(sys, x0, 3.0, 20.0, dt); });
  check("imitation 8(1+sin)", [&](double dt) {
    return control::build_imitation_path(sys, x0, InputSignal::sinusoid(8.0, 20.0), 20.0, dt);
  });
}

// ---------------------------------------------------------------- 10

void c10(Verdict& v) {
  const double c = 10.0, t = 200.0;
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(2.0, 20.0, InputSignal::constant(c)));
  const auto x0 = full(model::equilibrium_curve(0.0), c);
  const auto target = mc::equilibrium_target(sys, c, c, t, mc::XiTarget::noise_mean);
  mc::McOptions o;
  o.seed = 2024;
  const auto w = mc::default_weights(sys);
  const auto pts = mc::endpoints(sys, x0, t, 10000, o);
  const auto hit = mc::score_hits(pts, t, target, 1.0, w);
  v.detail << "hit: " << hit.hits << "/10000, ci [" << hit.ci_low << ", " << hit.ci_high << "]";
  for (double e : {1.5, 2.0}) v.detail << ", eps " << e << ": " << mc::score_hits(pts, t, target, e, w).hits;
  v.detail << "; ";
  v.require(hit.ci_low > 0.0, "hit ci_low > 0");

  const auto I = InputSignal::sinusoid(8.0, 20.0);
  const double tau = 1.0;
  const model::StochasticSystem tsys(hh(), NoiseSpec::ou(tau, 0.1, control::matched_ou_signal(I, 0.0, tau, 10.0, 1e-3)));
  const auto y0 = full(model::equilibrium_curve(0.0), 0.0);
  const auto path = control::build_imitation_path(tsys, y0, I, 10.0, 1e-3);
  mc::McOptions to;
  to.seed = 2024;
  const auto tube = control::tube_probability(path, tsys, 1.0, mc::default_weights(tsys), 10000, to);
  v.detail << "tube: " << tube.hits << "/10000, ci [" << tube.ci_low << ", " << tube.ci_high << "]; ";
  v.require(tube.ci_low > 0.0, "tube ci_low > 0");
}

// ---------------------------------------------------------------- 11

void c11(Verdict& v) {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 1.0, InputSignal::constant(0.0)));
  const auto rest = full(model::equilibrium_curve(0.0), 0.0);

  // PSD, inverse-flow residual and per-path positivity at rest (Delta != 0).
  double asym = 0.0, neg = 0.0, residual = 0.0;
  std::size_t samples = 0, positive = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    malliavin::FlowOptions o;
    o.seed = 1111;
    o.path_index = i;
    const auto p = malliavin::simulate_with_flow(sys, rest, o);
    for (const auto& s : p.samples) {
      const double scale = std::max(1.0, s.sigma_mal.norm());
      asym = std::max(asym, (s.sigma_mal - s.sigma_mal.transpose()).norm() / scale);
      if (s.t > 0.0) neg = std::max(neg, -hoermander::symmetric_lambda_min(s.sigma_mal) / scale);
      ++samples;
    }
    positive += p.samples.back().lambda_min > 0.0 ? 1 : 0;
    if (i < 10) residual = std::max(residual, malliavin::inverse_flow_consistency(sys, p.run));
  }
  v.detail << samples << " samples: max asymmetry " << asym << ", max negative eigenvalue " << neg << "; Z Y - I residual "
           << residual << "; lambda_min > 0 on " << positive << "/100 paths at rest; ";
  v.require(asym <= 1e-10, "symmetric within 1e-10");
  v.require(neg <= 1e-10, "PSD within 1e-10");
  v.require(residual < 1e-3, "Z Y = I residual < 1e-3");
  v.require(positive == 100, "every path lambda_min > 0 at a Delta != 0 point");

  // Rank ordering between a negative-window orbit point and a Delta ~ 0 orbit point.
  const auto orbit = ode::detect_stable_orbit(InputSignal::constant(15.0), model::equilibrium_curve(0.0), 600.0);
  const auto tab = ode::delta_along_orbit(orbit);
  // Window point: argmin Delta. Delta ~ 0 point: the smallest |Delta| among
  // samples adjacent to a sign change.
  const std::size_t N = tab.rows.size();
  std::size_t wmin = 0, zmin = N;
  for (std::size_t i = 0; i < N; ++i) {
    if (tab.rows[i].delta < tab.rows[wmin].delta) wmin = i;
    const std::size_t j = (i + 1) % N;
    if ((tab.rows[i].delta < 0.0) == (tab.rows[j].delta < 0.0)) continue;
    for (std::size_t k : {i, j})
      if (zmin == N || std::abs(tab.rows[k].delta) < std::abs(tab.rows[zmin].delta)) zmin = k;
  }
  if (zmin == N) throw std::runtime_error("no sign change of Delta on the orbit");
  const auto a = full(tab.rows[wmin].state, 0.0), b = full(tab.rows[zmin].state, 0.0);
  const auto rows = malliavin::degeneracy_scan(sys, {a, b}, 1.0, 100, 1e-3, 1112, 1);
  v.detail << "window point v=" << a[0] << " median lambda_min " << rows[0].median_lambda_min << ", Delta~0 point v=" << b[0]
           << " median lambda_min " << rows[1].median_lambda_min << " (median det " << rows[0].median_det << " vs "
           << rows[1].median_det << "); ";
  v.require(rows[0].median_lambda_min > rows[1].median_lambda_min, "median lambda_min rank-ordered");
}

// ---------------------------------------------------------------- 12

std::string run_cli(std::vector<std::string> args, int& code) {
  args.insert(args.begin(), "weakh");
  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream out, err;
  code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return out.str();
}

void c12(Verdict& v) {
  const std::vector<std::vector<std::string>> configs = {
      {"det-scan", "--v-lo", "-15", "--v-hi", "30"},
      {"orbit"},
      {"simulate", "--t-end", "20", "--seed", "12", "--stride", "10"},
      {"hit", "--t", "50", "--n-paths", "2000", "--seed", "12", "--eps", "[1,2,4,8]"},
      {"tube", "--n-paths", "500", "--seed", "12", "--path", R"({"kind":"ramp","z1":3,"t_end":5})", "--delta", "[1,4]"},
      {"control", "--path", R"({"kind":"imitation","input":{"kind":"sinusoid","amplitude":8,"period":20},"t_end":10})"},
      {"malliavin", "--seed", "12"},
      {"malliavin", "--seed", "12", "--points", "[[0,0.3177,0.0529,0.5961,0],[5,0.35,0.1,0.5,1]]", "--n-paths", "20"},
  };
  int same = 0;
  for (const auto& cfg : configs) {
    int c1 = 0, c2 = 0, c3 = 0;
    const auto a = run_cli(cfg, c1);
    const auto b = run_cli(cfg, c2);
    auto t8 = cfg;
    t8.insert(t8.end(), {"--threads", "8"});
    const auto c = run_cli(t8, c3);
    const bool ok = c1 == 0 && c2 == 0 && c3 == 0 && !a.empty() && a == b && a == c;
    same += ok ? 1 : 0;
    if (!ok) v.detail << cfg[0] << " differs or failed (exit " << c1 << "/" << c2 << "/" << c3 << "); ";
  }
  v.detail << same << "/" << configs.size() << " configs byte-identical across reruns and --threads 8; ";
  v.require(same == static_cast<int>(configs.size()), "byte-identical output");
}

const std::map<std::string, std::pair<std::string, void (*)(Verdict&)>>& criteria() {
  static const std::map<std::string, std::pair<std::string, void (*)(Verdict&)>> m = {
      {"c01", {"rest value of the balancing input", c01}},
      {"c02", {"Delta sign at rest", c02}},
      {"c03", {"zeros of Delta on the equilibrium curve", c03}},
      {"c04", {"input window", c04}},
      {"c05", {"stable orbit at input 15 and its negative window", c05}},
      {"c06", {"gating variables stay in [0,1]", c06}},
      {"c07", {"jet derivatives vs finite differences", c07}},
      {"c08", {"bracket oracle and rank ordering", c08}},
      {"c09", {"control roundtrip", c09}},
      {"c10", {"positivity of hitting and tube probabilities", c10}},
      {"c11", {"Malliavin covariance diagnostics", c11}},
      {"c12", {"CLI reproducibility", c12}},
  };
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> ids;
  for (int i = 1; i < argc; ++i) ids.emplace_back(argv[i]);
  if (ids.empty())
    for (const auto& [id, _] : criteria()) ids.push_back(id);
  int failed = 0;
  for (const auto& id : ids) {
    const auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      it->second.second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "] ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s: %s(%.1f s)\n", v.pass ? "PASS" : "FAIL", id.c_str(), it->second.first.c_str(),
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
  return failed == 0 ? 0 : 1;
}
