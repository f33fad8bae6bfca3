#include "weakh/mc/density.hpp"

#include <cmath>
#include <stdexcept>

#include "weakh/model/hh.hpp"
#include "weakh/util/error.hpp"
#include "weakh/util/format.hpp"
#include "weakh/util/parallel.hpp"

namespace weakh::mc {

WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) throw std::invalid_argument("wilson_interval: n = 0");
  if (hits > n) throw std::invalid_argument("wilson_interval: hits > n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  // Exact endpoints at the extremes; keeps low <= p <= high under rounding.
  if (hits == 0) w.low = 0.0;
  if (hits == n) w.high = 1.0;
  w.low = std::min(w.low, p);
  w.high = std::max(w.high, p);
  return w;
}

Eigen::VectorXd default_weights(const model::StochasticSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 20.0);
  w[0] = 1.0 / 3.0;
  w[m - 1] = 1.0 / 3.0;
  return w;
}

double weighted_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  return (w.array() * (x - y).array().abs()).maxCoeff();
}

std::vector<Eigen::VectorXd> endpoints(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                                       std::size_t n_paths, const McOptions& opt) {
  if (!(t >= 0.0)) throw std::invalid_argument("endpoints: t must be >= 0");
  std::vector<Eigen::VectorXd> out(n_paths);
  util::parallel_for(n_paths, opt.threads, [&](std::size_t i) {
    sde::SimOptions so;
    so.dt = opt.dt;
    so.t_end = t;
    so.seed = opt.seed;
    so.path_index = i;
    Eigen::VectorXd last = x0;
    sde::simulate_observed(sys, x0, so, [&](std::size_t, double, std::span<const double> x) {
      last = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
      return true;
    });
    out[i] = std::move(last);
  });
  return out;
}

namespace {

void check_ball(const Eigen::VectorXd& target, double eps, const Eigen::VectorXd& weights, std::size_t dim) {
  if (!(eps > 0.0)) throw std::invalid_argument("hit_probability: epsilon must be > 0");
  if (static_cast<std::size_t>(target.size()) != dim || static_cast<std::size_t>(weights.size()) != dim)
    throw std::invalid_argument("hit_probability: target/weights dimension mismatch");
  if (!(weights.array() > 0.0).all() || !weights.allFinite())
    throw std::invalid_argument("hit_probability: weights must be positive");
}

}  // namespace

HitEstimate score_hits(const std::vector<Eigen::VectorXd>& points, double t, const Eigen::VectorXd& target,
                       double eps, const Eigen::VectorXd& weights) {
  if (points.empty()) throw std::invalid_argument("hit_probability: n_paths must be > 0");
  check_ball(target, eps, weights, static_cast<std::size_t>(points.front().size()));
  std::size_t hits = 0;
  for (const auto& x : points) {
    if (weighted_distance(x, target, weights) < eps) ++hits;
  }
  HitEstimate e;
  e.n_paths = points.size();
  e.hits = hits;
  e.probability = static_cast<double>(hits) / static_cast<double>(points.size());
  const auto w = wilson_interval(hits, points.size());
  e.ci_low = w.low;
  e.ci_high = w.high;
  e.t = t;
  e.epsilon = eps;
  e.target = target;
  e.weights = weights;
  return e;
}

HitEstimate hit_probability(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                            const Eigen::VectorXd& target, double eps, const Eigen::VectorXd& weights,
                            std::size_t n_paths, const McOptions& opt) {
  if (n_paths == 0) throw std::invalid_argument("hit_probability: n_paths must be > 0");
  check_ball(target, eps, weights, sys.dimension());
  return score_hits(endpoints(sys, x0, t, n_paths, opt), t, target, eps, weights);
}

std::vector<HitEstimate> hit_ladder(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                                    const Eigen::VectorXd& target, const std::vector<double>& eps,
                                    const Eigen::VectorXd& weights, std::size_t n_paths, const McOptions& opt) {
  if (n_paths == 0) throw std::invalid_argument("hit_probability: n_paths must be > 0");
  for (double e : eps) check_ball(target, e, weights, sys.dimension());
  const auto pts = endpoints(sys, x0, t, n_paths, opt);
  std::vector<HitEstimate> out;
  out.reserve(eps.size());
  for (double e : eps) out.push_back(score_hits(pts, t, target, e, weights));
  return out;
}

double noise_mean(const model::NoiseSpec& noise, double xi0, double t) {
  if (noise.kind() == model::NoiseSpec::Kind::generic)
    throw std::invalid_argument("noise_mean: only defined for OU and CIR inputs");
  const double tau = noise.tau();
  const auto& S = noise.signal();
  const double decay = std::exp(-tau * t);
  if (t <= 0.0) return xi0;
  // Composite Simpson on [0, t] for tau int e^{-tau (t - s)} S(s) ds.
  const std::size_t panels = 20000;
  const double h = t / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t k = 0; k <= panels; ++k) {
    const double s = h * static_cast<double>(k);
    const double wgt = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += wgt * std::exp(-tau * (t - s)) * S(s);
  }
  return xi0 * decay + tau * acc * h / 3.0;
}

Eigen::VectorXd equilibrium_target(const model::StochasticSystem& sys, double c, double zeta, double t,
                                   XiTarget mode) {
  if (sys.model().channel_count() != 3)
    throw std::invalid_argument("equilibrium_target: needs the three-gate HH model");
  const auto eq = ode::equilibrium_for_input(c);
  double xi = 0.0;
  if (mode == XiTarget::linear_shift) {
    const auto U = sys.noise().state_interval();
    // zeta + c s is monotone in s, so checking both ends covers [0, t].
    if (!U.contains(zeta) || !U.contains(zeta + c * t))
      throw std::invalid_argument("equilibrium_target: zeta + c s leaves the input interval");
    xi = zeta + c * t;
  } else {
    xi = noise_mean(sys.noise(), zeta, t);
  }
  Eigen::VectorXd x(5);
  x << eq.v, eq.n, eq.m, eq.h, xi;
  return x;
}

Eigen::VectorXd orbit_target(const ode::Orbit& orbit, const model::InputSignal& input, double zeta, double T) {
  Eigen::VectorXd x(5);
  const auto& s = orbit.section_state;
  x << s.v, s.n, s.m, s.h, zeta + input.integral(0.0, T);
  return x;
}

double DensityTable::mass() const {
  double sum = 0.0;
  for (double d : density) sum += d;
  return sum * dx * dy;
}

DensityTable projected_density(const std::vector<Eigen::VectorXd>& points, std::size_t i, std::size_t j,
                               const Grid2& grid, double bw_x, double bw_y) {
  if (points.size() < 100) throw std::invalid_argument("projected_density: needs at least 100 paths");
  if (!(bw_x > 0.0) || !(bw_y > 0.0) || !std::isfinite(bw_x) || !std::isfinite(bw_y))
    throw std::invalid_argument("projected_density: degenerate bandwidth");
  if (grid.nx == 0 || grid.ny == 0 || !(grid.x_hi > grid.x_lo) || !(grid.y_hi > grid.y_lo))
    throw std::invalid_argument("projected_density: empty grid");
  const auto dim = static_cast<std::size_t>(points.front().size());
  if (i >= dim || j >= dim) throw std::invalid_argument("projected_density: coordinate out of range");

  DensityTable out;
  out.i = i;
  out.j = j;
  out.dx = (grid.x_hi - grid.x_lo) / static_cast<double>(grid.nx);
  out.dy = (grid.y_hi - grid.y_lo) / static_cast<double>(grid.ny);
  for (std::size_t c = 0; c < grid.nx; ++c) out.x.push_back(grid.x_lo + (static_cast<double>(c) + 0.5) * out.dx);
  for (std::size_t r = 0; r < grid.ny; ++r) out.y.push_back(grid.y_lo + (static_cast<double>(r) + 0.5) * out.dy);

  // Cell masses of each kernel factorise into products of normal CDF differences.
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  std::vector<double> mass(grid.nx * grid.ny, 0.0), px(grid.nx), py(grid.ny);
  for (const auto& p : points) {
    const double xc = p[static_cast<Eigen::Index>(i)], yc = p[static_cast<Eigen::Index>(j)];
    for (std::size_t c = 0; c < grid.nx; ++c) {
      const double a = grid.x_lo + static_cast<double>(c) * out.dx;
      px[c] = cdf((a + out.dx - xc) / bw_x) - cdf((a - xc) / bw_x);
    }
    for (std::size_t r = 0; r < grid.ny; ++r) {
      const double a = grid.y_lo + static_cast<double>(r) * out.dy;
      py[r] = cdf((a + out.dy - yc) / bw_y) - cdf((a - yc) / bw_y);
    }
    for (std::size_t r = 0; r < grid.ny; ++r) {
      if (py[r] == 0.0) continue;
      for (std::size_t c = 0; c < grid.nx; ++c) mass[r * grid.nx + c] += py[r] * px[c];
    }
  }
  double total = 0.0;
  for (double w : mass) total += w;
  out.captured = total / static_cast<double>(points.size());
  if (!(total > 0.0)) throw ComputationError("projected_density: no kernel mass on the grid");
  out.density.resize(mass.size());
  for (std::size_t k = 0; k < mass.size(); ++k) out.density[k] = mass[k] / (total * out.dx * out.dy);
  return out;
}

std::string estimates_csv(const std::vector<HitEstimate>& rows) {
  std::string out = "t,epsilon,p,ci_low,ci_high,n\n";
  for (const auto& e : rows) {
    out += util::csv_row(std::vector<double>{e.t, e.epsilon, e.probability, e.ci_low, e.ci_high});
    out += ',' + std::to_string(e.n_paths) + '\n';
  }
  return out;
}

std::string density_csv(const DensityTable& table) {
  std::vector<std::string> head{"y\\x"};
  for (double x : table.x) head.push_back(util::format_double(x));
  std::string out = util::csv_row(head) + '\n';
  for (std::size_t r = 0; r < table.y.size(); ++r) {
    std::vector<double> row{table.y[r]};
    for (std::size_t c = 0; c < table.x.size(); ++c) row.push_back(table.at(r, c));
    out += util::csv_row(row) + '\n';
  }
  return out;
}

}  // namespace weakh::mc
