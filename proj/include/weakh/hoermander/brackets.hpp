#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "weakh/model/sde_system.hpp"

namespace weakh::hoermander {

/// Vector field on time-space [0, inf) x R^m. The time component is a
/// constant (1 for the drift field A_0, 0 for every other field), so only
/// the spatial part is evaluated.
struct Field {
  double time_component = 0.0;
  /// Spatial part independent of (t, x); lets brackets skip a derivative.
  bool constant = false;
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)> eval;

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const { return eval(t, x); }
};

struct BracketOptions {
  /// Absolute step along the unit direction of the differentiating field.
  double step = 0.8;
  /// Richardson extrapolations per nesting level (0, 1 or 2).
  int richardson = 1;
  /// When set, each stencil is shortened to stay inside the box; a step
  /// below 1e-9 raises ComputationError("bracket stencil exits working box").
  std::optional<model::Box> box;
};

/// [T, V] = dV.T - dT.V (time derivative included through the time
/// components), by central differences along the normalized direction.
Field lie_bracket(const Field& T, const Field& V, const BracketOptions& opt = {});

/// A_0 = (1, Stratonovich drift) and A_1 = (0, diffusion) of a system. Both
/// throw ComputationError("bracket stencil exits working box") when
/// evaluated outside the system's working box.
Field drift_field(const model::StochasticSystem& sys);
Field diffusion_field(const model::StochasticSystem& sys);

struct BracketSet {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd A1;
  /// L_1 .. L_order.
  std::vector<Eigen::VectorXd> L;
  Eigen::MatrixXd gram;
  double lambda_min = 0.0;
};

/// L_1 = [A_1, A_0], L_{k+1} = [A_1, L_k] for k < order; Gram of {A_1, L_1..L_order}.
BracketSet numeric_brackets(const model::StochasticSystem& sys, double t, const Eigen::VectorXd& x, int order,
                            const BracketOptions& opt = {});

/// Multi-index alpha in {0,1}^l; norm |alpha| + #{j : alpha_j = 0}.
using MultiIndex = std::vector<int>;
int multi_index_norm(const MultiIndex& a);

/// All multi-indices (empty one included) with norm <= n_max whose bracket
/// is not identically zero: the first letter applied to A_1 cannot be 1
/// because [A_1, A_1] = 0.
std::vector<MultiIndex> enumerate_multi_indices(int n_max);

struct QuadraticForm {
  double value = 0.0;         // min(lambda_min, 1)
  double lambda_min = 0.0;
  Eigen::MatrixXd gram;
  std::size_t field_count = 0;
};

/// V_L(t, x) = inf over unit eta of sum over ||alpha|| <= L-1 of
/// <(A_1)_(alpha)(t, x), eta>^2, capped at 1.
QuadraticForm v_quadratic_form(const model::StochasticSystem& sys, double t, const Eigen::VectorXd& x, int L,
                               const BracketOptions& opt = {});

/// Smallest eigenvalue of a symmetric matrix.
double symmetric_lambda_min(const Eigen::MatrixXd& G);

}  // namespace weakh::hoermander
