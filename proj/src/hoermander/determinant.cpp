#include "weakh/hoermander/determinant.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "weakh/util/format.hpp"

namespace weakh::hoermander {

using model::Jet4;

bool DeterminantReport::nonzero() const { return std::abs(value) > kNonzeroRelative * scale; }

namespace {

DeterminantReport finish(Eigen::VectorXd point, Eigen::MatrixXd M) {
  DeterminantReport r;
  r.point = std::move(point);
  r.value = M.determinant();
  r.scale = 1.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) r.scale *= M.row(i).norm();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  r.condition_estimate = smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
  r.matrix = std::move(M);
  return r;
}

// d^j/dv^j (-a_i p_i + b_i) for j = 0..4 from the kinetics jets.
std::vector<Jet4> gating_jets(const model::MembraneModel& model, const Eigen::VectorXd& x) {
  const std::size_t k = model.channel_count();
  std::vector<Jet4> a(k), b(k), d(k);
  model.kinetics(Jet4::variable(x[0]), a, b);
  for (std::size_t i = 0; i < k; ++i) d[i] = b[i] - a[i] * x[static_cast<Eigen::Index>(i + 1)];
  return d;
}

void check_point(const model::MembraneModel& model, const Eigen::VectorXd& x, const char* what) {
  const auto k = static_cast<Eigen::Index>(model.channel_count());
  if (k > 3) throw std::invalid_argument(std::string(what) + ": at most 3 channel variables are supported");
  if (x.size() < k + 1) throw std::invalid_argument(std::string(what) + ": state too short");
  for (Eigen::Index i = 0; i <= k; ++i) {
    if (!std::isfinite(x[i])) throw std::invalid_argument(std::string(what) + ": non-finite state");
  }
}

}  // namespace

DeterminantReport determinant_D(const model::MembraneModel& model, const Eigen::VectorXd& x) {
  check_point(model, x, "determinant_D");
  const std::size_t k = model.channel_count();
  const auto n = static_cast<Eigen::Index>(k + 1);
  const auto d = gating_jets(model, x);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  // F is affine in v: only the first derivative survives.
  M(0, 0) = model.voltage_slope(std::span<const double>(x.data() + 1, k));
  for (std::size_t i = 0; i < k; ++i) {
    for (Eigen::Index j = 1; j <= n; ++j) {
      M(static_cast<Eigen::Index>(i + 1), j - 1) = d[i].derivative(static_cast<std::size_t>(j));
    }
  }
  return finish(x.head(n), std::move(M));
}

DeterminantReport determinant_delta(const model::MembraneModel& model, const Eigen::VectorXd& x) {
  check_point(model, x, "determinant_delta");
  const std::size_t k = model.channel_count();
  const auto n = static_cast<Eigen::Index>(k);
  const auto d = gating_jets(model, x);
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      M(i, j) = d[static_cast<std::size_t>(i)].derivative(static_cast<std::size_t>(j + 2));
    }
  }
  return finish(x.head(n + 1), std::move(M));
}

DeterminantReport determinant_delta_hh(double v, double n, double m, double h) {
  Eigen::Vector4d p(v, n, m, h);
  Eigen::MatrixXd M(3, 3);
  const Jet4 vj = Jet4::variable(v);
  for (int i = 0; i < 3; ++i) {
    const Jet4 d = model::gating_drift(model::kGates[static_cast<std::size_t>(i)], vj, p[i + 1]);
    for (int j = 0; j < 3; ++j) M(i, j) = d.derivative(static_cast<std::size_t>(j + 2));
  }
  return finish(p, std::move(M));
}

namespace {
double delta_on_curve(double v) {
  const auto s = model::equilibrium_curve(v);
  return determinant_delta_hh(v, s.n, s.m, s.h).value;
}
}  // namespace

DeltaScan scan_delta_equilibrium(double lo, double hi, double step, double tol) {
  if (!(step > 0.0) || !(tol > 0.0)) throw std::invalid_argument("scan: step and tolerance must be positive");
  DeltaScan scan;
  if (!(lo < hi)) return scan;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  scan.rows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    const auto s = model::equilibrium_curve(v);
    const auto rep = determinant_delta_hh(v, s.n, s.m, s.h);
    scan.rows.push_back({v, s, rep.value, rep.matrix});
  }
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    const double d0 = scan.rows[i - 1].delta, d1 = scan.rows[i].delta;
    if (d1 == 0.0) {
      scan.zeros.push_back(scan.rows[i].v);
      continue;
    }
    if (d0 == 0.0 || (d0 > 0.0) == (d1 > 0.0)) continue;
    double a = scan.rows[i - 1].v, b = scan.rows[i].v;
    const bool neg_left = d0 < 0.0;
    while (b - a > tol) {
      const double mid = 0.5 * (a + b);
      if ((delta_on_curve(mid) < 0.0) == neg_left) a = mid; else b = mid;
    }
    scan.zeros.push_back(0.5 * (a + b));
  }
  return scan;
}

std::string delta_scan_csv(const DeltaScan& scan) {
  std::string out = "v,n,m,h,delta,d2n,d3n,d4n,d2m,d3m,d4m,d2h,d3h,d4h\n";
  for (const auto& r : scan.rows) {
    std::vector<double> vals = {r.v, r.state.n, r.state.m, r.state.h, r.delta};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) vals.push_back(r.matrix(i, j));
    out += util::csv_row(vals);
    out += '\n';
  }
  return out;
}

}  // namespace weakh::hoermander
