#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakh/model/hh.hpp"
#include "weakh/model/membrane_model.hpp"

namespace weakh::hoermander {

struct DeterminantReport {
  Eigen::VectorXd point;
  double value = 0.0;
  Eigen::MatrixXd matrix;
  /// Largest over smallest singular value (inf when singular).
  double condition_estimate = 0.0;
  /// Product of the row norms, the reference scale for zero tests.
  double scale = 0.0;

  /// |value| > 1e-6 * scale.
  bool nonzero() const;
};

inline constexpr double kNonzeroRelative = 1e-6;

/// Determinant of size m - 1 whose columns are d^k/dv^k of
/// J = (F, J_1, .., J_k), k = 1..m-1, with J_i = -a_i(v) p_i + b_i(v).
/// `x` holds (v, p_1, .., p_k) and optionally the input coordinate, which
/// is ignored. Needs k <= 3 (jets carry four derivatives).
DeterminantReport determinant_D(const model::MembraneModel& model, const Eigen::VectorXd& x);

/// k x k determinant of d^j/dv^j (-a_i p_i + b_i), j = 2..k+1.
DeterminantReport determinant_delta(const model::MembraneModel& model, const Eigen::VectorXd& x);

/// The 3 x 3 Hodgkin-Huxley determinant (rows n, m, h; derivative orders 2, 3, 4).
DeterminantReport determinant_delta_hh(double v, double n, double m, double h);

struct DeltaScanRow {
  double v = 0.0;
  model::HHState state;
  double delta = 0.0;
  Eigen::Matrix3d matrix;
};

struct DeltaScan {
  std::vector<DeltaScanRow> rows;
  /// Sign changes of v -> Delta(v, x_inf(v)), refined by bisection.
  std::vector<double> zeros;
};

/// Scan of Delta along the equilibrium curve on [lo, hi] with the given step,
/// zeros bisected to `tol`. An empty range (lo >= hi) gives an empty scan.
DeltaScan scan_delta_equilibrium(double lo, double hi, double step = 0.01, double tol = 1e-8);

/// CSV text: v,n,m,h,delta,d2n,d3n,d4n,d2m,d3m,d4m,d2h,d3h,d4h
std::string delta_scan_csv(const DeltaScan& scan);

}  // namespace weakh::hoermander
