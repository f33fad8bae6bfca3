#include "weakh/model/sde_system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "weakh/model/conductance_model.hpp"

namespace weakh::model {

StochasticSystem::StochasticSystem(std::shared_ptr<const MembraneModel> model, NoiseSpec noise)
    : model_(std::move(model)), noise_(std::move(noise)) {
  if (!model_) throw std::invalid_argument("StochasticSystem: null model");
}

Eigen::VectorXd StochasticSystem::drift(double t, const Eigen::VectorXd& x) const {
  const std::size_t k = model_->channel_count();
  const std::size_t m = k + 2;
  const double v = x[0];
  const double xi = x[static_cast<Eigen::Index>(m - 1)];
  const std::span<const double> p(x.data() + 1, k);
  std::vector<double> a(k), b(k);
  model_->kinetics(v, a, b);

  Eigen::VectorXd out(m);
  const double bm = noise_.drift(t, xi);
  out[0] = model_->voltage_drift(v, p) + bm / model_->capacitance();
  for (std::size_t i = 0; i < k; ++i) out[static_cast<Eigen::Index>(i + 1)] = -a[i] * p[i] + b[i];
  out[static_cast<Eigen::Index>(m - 1)] = bm;
  return out;
}

Eigen::VectorXd StochasticSystem::diffusion(const Eigen::VectorXd& x) const {
  const auto m = static_cast<Eigen::Index>(dimension());
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
  const double sig = noise_.sigma(x[m - 1]);
  s[0] = sig / model_->capacitance();
  s[m - 1] = sig;
  return s;
}

Eigen::VectorXd StochasticSystem::stratonovich_drift(double t, const Eigen::VectorXd& x) const {
  const auto m = static_cast<Eigen::Index>(dimension());
  Eigen::VectorXd out = drift(t, x);
  const double xi = x[m - 1];
  const double corr = 0.5 * noise_.sigma(xi) * noise_.dsigma(xi);
  out[0] -= corr / model_->capacitance();
  out[m - 1] -= corr;
  return out;
}

double StochasticSystem::noise_drift_slope(double t, double xi) const {
  if (noise_.kind() != NoiseSpec::Kind::generic) return -noise_.tau();
  const double h = 1e-6 * std::max(1.0, std::abs(xi));
  return (noise_.drift(t, xi + h) - noise_.drift(t, xi - h)) / (2.0 * h);
}

double StochasticSystem::sigma_dsigma_slope(double xi) const {
  // sigma sigma' is constant for OU (0) and CIR (gamma^2 tau / 2).
  if (noise_.kind() != NoiseSpec::Kind::generic) return 0.0;
  const double h = 1e-6 * std::max(1.0, std::abs(xi));
  const auto f = [&](double y) { return noise_.sigma(y) * noise_.dsigma(y); };
  return (f(xi + h) - f(xi - h)) / (2.0 * h);
}

Eigen::MatrixXd StochasticSystem::drift_jacobian(double t, const Eigen::VectorXd& x) const {
  const std::size_t k = model_->channel_count();
  const auto m = static_cast<Eigen::Index>(k + 2);
  const double v = x[0];
  const double xi = x[m - 1];
  const std::span<const double> p(x.data() + 1, k);

  std::vector<Jet4> a(k), b(k);
  model_->kinetics(Jet4::variable(v), a, b);
  std::vector<double> grad(k);
  model_->voltage_gradient(v, p, grad);

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  const double slope = noise_drift_slope(t, xi);
  J(0, 0) = model_->voltage_slope(p);
  for (std::size_t j = 0; j < k; ++j) J(0, static_cast<Eigen::Index>(j + 1)) = grad[j];
  J(0, m - 1) = slope / model_->capacitance();
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = static_cast<Eigen::Index>(i + 1);
    J(r, 0) = -a[i].c[1] * p[i] + b[i].c[1];
    J(r, r) = -a[i].c[0];
  }
  J(m - 1, m - 1) = slope;
  return J;
}

Eigen::MatrixXd StochasticSystem::stratonovich_drift_jacobian(double t, const Eigen::VectorXd& x) const {
  Eigen::MatrixXd J = drift_jacobian(t, x);
  const auto m = static_cast<Eigen::Index>(dimension());
  const double d = 0.5 * sigma_dsigma_slope(x[m - 1]);
  J(0, m - 1) -= d / model_->capacitance();
  J(m - 1, m - 1) -= d;
  return J;
}

Eigen::MatrixXd StochasticSystem::diffusion_jacobian(const Eigen::VectorXd& x) const {
  const auto m = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  const double ds = noise_.dsigma(x[m - 1]);
  J(0, m - 1) = ds / model_->capacitance();
  J(m - 1, m - 1) = ds;
  return J;
}

Box StochasticSystem::working_box() const {
  const auto m = static_cast<Eigen::Index>(dimension());
  Box box{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Ones(m)};
  double v_lo = -150.0, v_hi = 250.0;
  if (const auto* cm = dynamic_cast<const ConductanceModel*>(model_.get())) {
    v_lo = cm->v_min();
    v_hi = cm->v_max();
  }
  box.lo[0] = v_lo;
  box.hi[0] = v_hi;
  const Interval U = noise_.state_interval();
  box.lo[m - 1] = std::max(U.lo, -1e6);
  box.hi[m - 1] = std::min(U.hi, 1e6);
  return box;
}

std::string StochasticSystem::fingerprint() const { return model_->fingerprint() + " | " + noise_.fingerprint(); }

}  // namespace weakh::model
