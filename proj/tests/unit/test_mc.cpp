#include <doctest.h>

#include <cmath>
#include <random>

#include "weakh/mc/density.hpp"
#include "weakh/model/hh.hpp"
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

Eigen::VectorXd rest(double xi) { return full_state(model::equilibrium_curve(0.0), xi); }

}  // namespace

TEST_CASE("Wilson interval") {
  // hits = 0: upper end z^2 / (n + z^2).
  const double z = 1.959963984540054;
  auto w = mc::wilson_interval(0, 10);
  CHECK(w.low == 0.0);
  CHECK(w.high == doctest::Approx(z * z / (10 + z * z)).epsilon(1e-12));
  w = mc::wilson_interval(10, 10);
  CHECK(w.high == 1.0);
  CHECK(w.low == doctest::Approx(10 / (10 + z * z)).epsilon(1e-12));
  // Textbook value for 1 success in 10: (0.0179, 0.4042).
  w = mc::wilson_interval(1, 10);
  CHECK(w.low == doctest::Approx(0.01787).epsilon(1e-3));
  CHECK(w.high == doctest::Approx(0.40415).epsilon(1e-3));
  CHECK_THROWS_AS(mc::wilson_interval(0, 0), std::invalid_argument);

  std::mt19937_64 gen(7);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 1 + gen() % 100000;
    const std::size_t k = gen() % (n + 1);
    const auto iv = mc::wilson_interval(k, n);
    const double p = static_cast<double>(k) / static_cast<double>(n);
    REQUIRE(0.0 <= iv.low);
    REQUIRE(iv.low <= p);
    REQUIRE(p <= iv.high);
    REQUIRE(iv.high <= 1.0);
  }
}

TEST_CASE("weighted max-norm") {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 1.0, InputSignal::constant(0.0)));
  const auto w = mc::default_weights(sys);
  CHECK(w[0] == doctest::Approx(1.0 / 3.0));
  CHECK(w[2] == 20.0);
  CHECK(w[4] == doctest::Approx(1.0 / 3.0));
  Eigen::VectorXd a = Eigen::VectorXd::Zero(5), b = a;
  b[0] = 2.9;
  CHECK(mc::weighted_distance(a, b, w) < 1.0);
  b[1] = 0.06;
  CHECK(mc::weighted_distance(a, b, w) == doctest::Approx(1.2));
}

TEST_CASE("trivial hit probabilities and errors") {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 2.0, InputSignal::constant(0.0)));
  const auto x0 = rest(0.0);
  mc::McOptions o;
  o.seed = 3;
  auto far = x0;
  far[0] += 40.0;
  const Eigen::VectorXd tiny = Eigen::VectorXd::Constant(5, 1e-9);
  CHECK(mc::hit_probability(sys, x0, 5.0, far, 1.0, tiny, 200, o).probability == 1.0);
  const auto at0 = mc::hit_probability(sys, x0, 0.0, far, 0.1, mc::default_weights(sys), 200, o);
  CHECK(at0.probability == 0.0);
  CHECK(at0.ci_low == 0.0);
  CHECK(at0.ci_high > 0.0);
  CHECK_THROWS_AS(mc::hit_probability(sys, x0, 1.0, far, 1.0, tiny, 0, o), std::invalid_argument);
  CHECK_THROWS_AS(mc::hit_probability(sys, x0, 1.0, far, 0.0, tiny, 10, o), std::invalid_argument);
  Eigen::VectorXd bad = tiny;
  bad[2] = 0.0;
  CHECK_THROWS_AS(mc::hit_probability(sys, x0, 1.0, far, 1.0, bad, 10, o), std::invalid_argument);
}

TEST_CASE("epsilon ladder is monotone and thread count does not matter") {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(2.0, 15.0, InputSignal::constant(10.0)));
  const auto x0 = rest(10.0);
  const auto target = mc::equilibrium_target(sys, 10.0, 10.0, 20.0, mc::XiTarget::noise_mean);
  mc::McOptions o;
  o.seed = 11;
  const std::vector<double> eps{0.5, 1, 2, 4, 8, 16};
  const auto one = mc::hit_ladder(sys, x0, 20.0, target, eps, mc::default_weights(sys), 400, o);
  o.threads = 4;
  const auto four = mc::hit_ladder(sys, x0, 20.0, target, eps, mc::default_weights(sys), 400, o);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(one[i].hits == four[i].hits);
    if (i) CHECK(one[i].probability >= one[i - 1].probability);
  }
  CHECK(one.back().probability > one.front().probability);
}

TEST_CASE("doubling the path count refines the estimate") {
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(1.0, 4.0, InputSignal::constant(0.0)));
  const auto x0 = rest(0.0);
  auto target = x0;
  target[0] += 2.0;
  const auto w = mc::default_weights(sys);
  mc::McOptions a, b;
  a.seed = 100;
  b.seed = 200;
  const auto e1 = mc::hit_probability(sys, x0, 10.0, target, 1.0, w, 1000, a);
  const auto e2 = mc::hit_probability(sys, x0, 10.0, target, 1.0, w, 2000, b);
  INFO(e1.probability << " " << e2.probability);
  CHECK(e1.probability > 0.05);
  CHECK(e1.probability < 0.95);
  CHECK(e2.ci_high - e2.ci_low < e1.ci_high - e1.ci_low);
  const double se = std::sqrt(e1.probability * (1 - e1.probability) / 1000 + e2.probability * (1 - e2.probability) / 2000);
  CHECK(std::abs(e1.probability - e2.probability) < 4 * se);
}

TEST_CASE("noise mean and targets") {
  const auto ou = NoiseSpec::ou(0.7, 1.0, InputSignal::constant(4.0));
  CHECK(mc::noise_mean(ou, 1.0, 2.0) == doctest::Approx(4.0 + (1.0 - 4.0) * std::exp(-1.4)).epsilon(1e-10));
  CHECK(mc::noise_mean(ou, 1.0, 0.0) == 1.0);
  // Long after the start the mean follows the periodic-mean formula.
  const auto sine = InputSignal::sinusoid(2.0, 10.0);
  const auto per = NoiseSpec::ou(0.5, 1.0, sine);
  CHECK(mc::noise_mean(per, 2.0, 83.0) == doctest::Approx(sde::ou_periodic_mean(sine, 83.0, 0.5)).epsilon(1e-6));

  const model::StochasticSystem sys(hh(), ou);
  const auto t = mc::equilibrium_target(sys, 10.0, 3.0, 200.0, mc::XiTarget::linear_shift);
  const auto eq = ode::equilibrium_for_input(10.0);
  CHECK(t[0] == eq.v);
  CHECK(t[3] == eq.h);
  CHECK(t[4] == doctest::Approx(2003.0));
  const auto m = mc::equilibrium_target(sys, 10.0, 3.0, 200.0, mc::XiTarget::noise_mean);
  CHECK(m[4] == doctest::Approx(4.0));

  // CIR: zeta + c s must stay above -K.
  const model::StochasticSystem cir(hh(), NoiseSpec::cir(1.0, 1.0, 3.0, InputSignal::constant(0.0)));
  CHECK_THROWS_AS(mc::equilibrium_target(cir, -6.0, 0.0, 1.0, mc::XiTarget::linear_shift), std::invalid_argument);
  CHECK_NOTHROW(mc::equilibrium_target(cir, -2.0, 0.0, 1.0, mc::XiTarget::linear_shift));

  const auto orbit = ode::detect_stable_orbit(InputSignal::constant(15.0), model::equilibrium_curve(0.0), 600.0);
  const auto x = mc::orbit_target(orbit, InputSignal::constant(15.0), 1.0, orbit.period);
  CHECK(x[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(x[4] == doctest::Approx(1.0 + 15.0 * orbit.period));
}

TEST_CASE("positivity from several starting points near x_c") {
  // Desk-scale stand-in: t = 50 ms and a radius-2 ball.
  const model::StochasticSystem sys(hh(), NoiseSpec::ou(2.0, 20.0, InputSignal::constant(10.0)));
  const auto target = mc::equilibrium_target(sys, 10.0, 10.0, 50.0, mc::XiTarget::noise_mean);
  const auto eq = ode::equilibrium_for_input(10.0);
  const double dv[5] = {0.0, 0.5, -0.5, 1.0, -1.0};
  for (int k = 0; k < 5; ++k) {
    auto x0 = full_state(eq, 10.0);
    x0[0] += dv[k];
    mc::McOptions o;
    o.seed = 500 + static_cast<std::uint64_t>(k);
    const auto e = mc::hit_probability(sys, x0, 50.0, target, 2.0, mc::default_weights(sys), 2000, o);
    INFO("start " << k << " p " << e.probability);
    CHECK(e.ci_low > 0.0);
  }
}

TEST_CASE("projected density") {
  const model::StochasticSystem quiet(hh(), NoiseSpec::ou(1.0, 1e-6, InputSignal::constant(0.0)));
  const auto x0 = rest(0.0);
  mc::McOptions o;
  o.seed = 1;
  const auto pts = mc::endpoints(quiet, x0, 5.0, 150, o);
  const double v = pts[0][0], xi = pts[0][4];
  mc::Grid2 g{v - 0.5, v + 0.5, 11, xi - 0.5, xi + 0.5, 11};
  const auto d = mc::projected_density(pts, 0, 4, g, 1e-4, 1e-4);
  CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d.at(5, 5) * d.dx * d.dy > 0.999);

  CHECK_THROWS_AS(mc::projected_density(pts, 0, 4, g, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mc::projected_density(pts, 0, 4, g, 1.0, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(mc::projected_density({pts.begin(), pts.begin() + 99}, 0, 4, g, 1.0, 1.0), std::invalid_argument);

  // The xi marginal of an OU input with constant S is symmetric about S.
  const double c = 5.0;
  const model::StochasticSystem ou(hh(), NoiseSpec::ou(1.0, 2.0, InputSignal::constant(c)));
  const auto cloud = mc::endpoints(ou, rest(c), 8.0, 4000, o);
  mc::Grid2 h{-60.0, 80.0, 20, c - 8.0, c + 8.0, 40};
  const auto k = mc::projected_density(cloud, 0, 4, h, 1.0, 0.4);
  CHECK(k.mass() == doctest::Approx(1.0).epsilon(1e-6));
  double left = 0.0, right = 0.0;
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t col = 0; col < 20; ++col) {
      left += k.at(r, col);
      right += k.at(39 - r, col);
    }
  }
  left *= k.dx * k.dy;
  right *= k.dx * k.dy;
  CHECK(std::abs(left - right) < 3.0 * std::sqrt(0.25 / 4000.0) * 2.0);
  CHECK(std::abs(left + right - 1.0) < 1e-9);
}

TEST_CASE("estimate and density CSV") {
  mc::HitEstimate e;
  e.t = 200;
  e.epsilon = 1;
  e.probability = 0.5;
  e.ci_low = 0.25;
  e.ci_high = 0.75;
  e.n_paths = 10;
  CHECK(mc::estimates_csv({e}) == "t,epsilon,p,ci_low,ci_high,n\n200,1,0.5,0.25,0.75,10\n");
  mc::DensityTable d;
  d.x = {0.5, 1.5};
  d.y = {2.0};
  d.density = {0.25, 0.75};
  CHECK(mc::density_csv(d) == "y\\x,0.5,1.5\n2,0.25,0.75\n");
}
