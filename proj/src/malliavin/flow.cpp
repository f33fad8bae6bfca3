#include "weakh/malliavin/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weakh/hoermander/determinant.hpp"
#include "weakh/sde/rng.hpp"
#include "weakh/sde/simulate.hpp"
#include "weakh/util/format.hpp"
#include "weakh/util/parallel.hpp"

namespace weakh::malliavin {

FlowRun run_flow(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const FlowOptions& opt) {
  if (!(opt.dt > 0.0)) throw std::invalid_argument("simulate_with_flow: dt must be positive");
  if (!(opt.t_end >= 0.0)) throw std::invalid_argument("simulate_with_flow: t_end must be >= 0");
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  if (x0.size() != m) throw std::invalid_argument("simulate_with_flow: initial state has wrong dimension");
  const auto box = sys.working_box();
  if (!box.contains(x0)) throw std::invalid_argument("simulate_with_flow: initial state outside the working box");

  sde::Stepper stepper(sys);
  sde::NormalSource normals(sde::path_stream(opt.seed, opt.path_index));
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.dt));
  const double sq = std::sqrt(opt.dt);

  FlowRun run;
  run.dt = opt.dt;
  run.t.reserve(steps + 1);
  run.X.reserve(steps + 1);
  run.Y.reserve(steps + 1);
  run.dW.reserve(steps);
  run.t.push_back(0.0);
  run.X.push_back(x0);
  run.Y.push_back(Eigen::MatrixXd::Identity(m, m));

  Eigen::VectorXd x = x0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i - 1) * opt.dt;
    const double dW = sq * normals.next();
    const Eigen::MatrixXd& Y = run.Y.back();
    const Eigen::MatrixXd Jb = sys.drift_jacobian(t, x);
    const Eigen::MatrixXd Js = sys.diffusion_jacobian(x);
    Eigen::MatrixXd Yn = Y + (Jb * Y) * opt.dt + (Js * Y) * dW;
    stepper.step(t, opt.dt, dW, std::span<double>(x.data(), static_cast<std::size_t>(m)));
    run.dW.push_back(dW);
    run.t.push_back(static_cast<double>(i) * opt.dt);
    run.X.push_back(x);
    run.Y.push_back(std::move(Yn));
    if (!box.contains(x)) {
      run.exited_box = true;
      break;
    }
  }
  return run;
}

namespace {

// Appends rows to the factor R of C = R^T R and re-triangularises.
void qr_update(Eigen::MatrixXd& R, const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd stacked(R.rows() + rows.rows(), R.cols());
  stacked << R, rows;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  R = qr.matrixQR().topRows(R.cols()).triangularView<Eigen::Upper>();
}

FlowSample make_sample(const FlowRun& run, std::size_t i, const Eigen::MatrixXd& R) {
  FlowSample s;
  s.t = run.t[i];
  s.X = run.X[i];
  s.Y = run.Y[i];
  s.C = R.transpose() * R;
  const Eigen::MatrixXd B = R * s.Y.transpose();
  Eigen::MatrixXd G = B.transpose() * B;
  s.sigma_mal = 0.5 * (G + G.transpose());
  const Eigen::JacobiSVD<Eigen::MatrixXd> svdB(B);
  const auto sv = svdB.singularValues();
  s.lambda_min = sv[sv.size() - 1] * sv[sv.size() - 1];
  double det = 1.0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) det *= sv[k] * sv[k];
  s.det = det;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svdY(s.Y);
  const auto sy = svdY.singularValues();
  const double lo = sy[sy.size() - 1];
  s.condition = lo > 0.0 ? sy[0] / lo : std::numeric_limits<double>::infinity();
  s.ill_conditioned = !(s.condition <= kIllConditioned);
  return s;
}

}  // namespace

std::vector<FlowSample> covariance_samples(const model::StochasticSystem& sys, const FlowRun& run,
                                           std::size_t sample_every) {
  if (sample_every == 0) throw std::invalid_argument("covariance_samples: sample_every must be >= 1");
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  std::vector<FlowSample> out;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  // g_n = Z_n s(X_n); C += dt/2 (g_n g_n^T + g_{n+1} g_{n+1}^T).
  auto g = [&](std::size_t i) -> Eigen::VectorXd {
    return run.Y[i].partialPivLu().solve(sys.diffusion(run.X[i]));
  };
  const double w = std::sqrt(0.5 * run.dt);
  out.push_back(make_sample(run, 0, R));
  Eigen::VectorXd g_prev = g(0);
  const std::size_t last = run.X.size() - 1;
  for (std::size_t i = 1; i <= last; ++i) {
    const Eigen::VectorXd g_next = g(i);
    Eigen::MatrixXd rows(2, m);
    rows.row(0) = w * g_prev.transpose();
    rows.row(1) = w * g_next.transpose();
    qr_update(R, rows);
    g_prev = g_next;
    if (i % sample_every == 0 || i == last) out.push_back(make_sample(run, i, R));
  }
  return out;
}

FlowPath simulate_with_flow(const model::StochasticSystem& sys, const Eigen::VectorXd& x0, const FlowOptions& opt) {
  FlowPath p;
  p.run = run_flow(sys, x0, opt);
  p.samples = covariance_samples(sys, p.run, opt.sample_every);
  return p;
}

double inverse_flow_consistency(const model::StochasticSystem& sys, const FlowRun& run) {
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd Z = I;
  double worst = 0.0;
  for (std::size_t n = 0; n + 1 < run.X.size(); ++n) {
    const double t0 = run.t[n], t1 = run.t[n + 1], dW = run.dW[n];
    const Eigen::MatrixXd A0 = sys.stratonovich_drift_jacobian(t0, run.X[n]);
    const Eigen::MatrixXd S0 = sys.diffusion_jacobian(run.X[n]);
    const Eigen::MatrixXd A1 = sys.stratonovich_drift_jacobian(t1, run.X[n + 1]);
    const Eigen::MatrixXd S1 = sys.diffusion_jacobian(run.X[n + 1]);
    const Eigen::MatrixXd k0 = -Z * (A0 * run.dt + S0 * dW);
    const Eigen::MatrixXd Zp = Z + k0;
    const Eigen::MatrixXd k1 = -Zp * (A1 * run.dt + S1 * dW);
    Z += 0.5 * (k0 + k1);
    worst = std::max(worst, (Z * run.Y[n + 1] - I).cwiseAbs().maxCoeff());
  }
  return worst;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::vector<DegeneracyRow> degeneracy_scan(const model::StochasticSystem& sys, const std::vector<Eigen::VectorXd>& points,
                                           double t, std::size_t n_paths, double dt, std::uint64_t seed,
                                           unsigned threads) {
  if (n_paths == 0) throw std::invalid_argument("degeneracy_scan: n_paths must be > 0");
  std::vector<DegeneracyRow> rows;
  for (const auto& x0 : points) {
    DegeneracyRow row;
    row.point = x0;
    row.delta = hoermander::determinant_delta(sys.model(), x0).value;
    std::vector<double> lam(n_paths), det(n_paths);
    std::vector<char> flag(n_paths, 0);
    util::parallel_for(n_paths, threads, [&](std::size_t i) {
      FlowOptions o;
      o.dt = dt;
      o.t_end = t;
      o.seed = seed;
      o.path_index = i;
      o.sample_every = std::numeric_limits<std::size_t>::max();
      const auto p = simulate_with_flow(sys, x0, o);
      const auto& s = p.samples.back();
      lam[i] = s.lambda_min;
      det[i] = s.det;
      flag[i] = (s.ill_conditioned || p.run.exited_box) ? 1 : 0;
    });
    row.median_lambda_min = median(lam);
    row.median_det = median(det);
    for (char f : flag) row.flagged += static_cast<std::size_t>(f);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string samples_csv(const std::vector<FlowSample>& samples) {
  std::string out = "t,lambda_min,det,condition\n";
  for (const auto& s : samples) out += util::csv_row(std::vector<double>{s.t, s.lambda_min, s.det, s.condition}) + '\n';
  return out;
}

}  // namespace weakh::malliavin
