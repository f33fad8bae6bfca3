#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/model/sde_system.hpp"
#include "weakh/ode/hh_ode.hpp"
#include "weakh/sde/simulate.hpp"

namespace weakh::mc {

struct HitEstimate {
  double probability = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::size_t n_paths = 0;
  std::size_t hits = 0;
  double t = 0.0;
  double epsilon = 0.0;
  Eigen::VectorXd target;
  Eigen::VectorXd weights;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

/// 95% Wilson score interval for `hits` successes out of n (n > 0).
WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054);

/// 1/3 per mV for v and xi, 20 for the channel variables, so that a ball of
/// radius 1 is +-3 mV and +-0.05.
Eigen::VectorXd default_weights(const model::StochasticSystem& sys);

/// max_i w_i |x_i - y_i|.
double weighted_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

struct McOptions {
  double dt = sde::kDefaultDt;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// States at time t of n independent paths started at x0. Path i uses the
/// stream (seed, i), so the result does not depend on the thread count.
std::vector<Eigen::VectorXd> endpoints(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                                       std::size_t n_paths, const McOptions& opt);

/// Fraction of paths whose state at time t lies in the open weighted ball of
/// radius eps around target. Throws invalid_argument for n_paths = 0,
/// eps <= 0 or non-positive weights.
HitEstimate hit_probability(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                            const Eigen::VectorXd& target, double eps, const Eigen::VectorXd& weights,
                            std::size_t n_paths, const McOptions& opt);

/// Same paths scored against every radius of a ladder (nested balls).
std::vector<HitEstimate> hit_ladder(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, double t,
                                    const Eigen::VectorXd& target, const std::vector<double>& eps,
                                    const Eigen::VectorXd& weights, std::size_t n_paths, const McOptions& opt);

/// Scores precomputed endpoints.
HitEstimate score_hits(const std::vector<Eigen::VectorXd>& points, double t, const Eigen::VectorXd& target,
                       double eps, const Eigen::VectorXd& weights);

/// How the last coordinate of a target is chosen.
enum class XiTarget {
  /// zeta + c t, the input that has been integrated along a constant drive c.
  linear_shift,
  /// E[xi_t] under the noise law started at zeta (OU and CIR).
  noise_mean,
};

/// E[xi_t] for OU/CIR started at xi0: xi0 e^{-tau t} + tau int_0^t e^{-tau (t-s)} S(s) ds.
double noise_mean(const model::NoiseSpec& noise, double xi0, double t);

/// (v_c, n_inf(v_c), m_inf(v_c), h_inf(v_c), xi) for the HH equilibrium of
/// constant input c. With linear_shift and a bounded interval U, zeta + c s
/// must stay in U for s in [0, t].
Eigen::VectorXd equilibrium_target(const model::StochasticSystem& sys, double c, double zeta, double t,
                                   XiTarget mode);

/// (section state of the orbit, zeta + int_0^T I) for an input signal I.
Eigen::VectorXd orbit_target(const ode::Orbit& orbit, const model::InputSignal& input, double zeta, double T);

struct Grid2 {
  double x_lo = 0.0, x_hi = 1.0;
  std::size_t nx = 50;
  double y_lo = 0.0, y_hi = 1.0;
  std::size_t ny = 50;
};

struct DensityTable {
  std::size_t i = 0, j = 0;
  std::vector<double> x;  // cell centres
  std::vector<double> y;
  /// density[r * nx + c] at (x[c], y[r]); sum of density * dx * dy is 1.
  std::vector<double> density;
  double dx = 0.0, dy = 0.0;
  /// Kernel mass that fell on the grid before normalisation.
  double captured = 0.0;

  double mass() const;
  double at(std::size_t r, std::size_t c) const { return density[r * x.size() + c]; }
};

/// Gaussian KDE of coordinates (i, j) of the points, integrated exactly over
/// grid cells and normalised to unit mass. Needs at least 100 points and
/// finite positive bandwidths.
DensityTable projected_density(const std::vector<Eigen::VectorXd>& points, std::size_t i, std::size_t j,
                               const Grid2& grid, double bw_x, double bw_y);

/// Rows t,epsilon,p,ci_low,ci_high,n.
std::string estimates_csv(const std::vector<HitEstimate>& rows);

/// First row "y\x" then x centres; each further row starts with its y centre.
std::string density_csv(const DensityTable& table);

}  // namespace weakh::mc
