#include "weakh/hoermander/brackets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "weakh/util/error.hpp"

namespace weakh::hoermander {

namespace {

// Derivative of F along (dt, dx) at (t, x), by a central difference on the
// normalized direction, scaled back by its length.
Eigen::VectorXd directional(const Field& F, double t, const Eigen::VectorXd& x, double dt, const Eigen::VectorXd& dx,
                            const BracketOptions& opt) {
  const double len = std::sqrt(dt * dt + dx.squaredNorm());
  if (len == 0.0) return Eigen::VectorXd::Zero(x.size());
  const double ut = dt / len;
  const Eigen::VectorXd ux = dx / len;
  double step = opt.step;
  if (opt.box) {
    // Largest s with x +- s ux inside the box, halved so nested stencils keep room.
    double reach = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = std::abs(ux[i]);
      if (u == 0.0) continue;
      reach = std::min(reach, std::min(opt.box->hi[i] - x[i], x[i] - opt.box->lo[i]) / u);
    }
    step = std::min(step, 0.5 * reach);
    if (!(step >= 1e-9)) throw ComputationError("bracket stencil exits working box");
  }
  const auto diff = [&](double h) -> Eigen::VectorXd {
    return (F(t + h * ut, x + h * ux) - F(t - h * ut, x - h * ux)) / (2.0 * h);
  };
  const Eigen::VectorXd d1 = diff(step);
  if (opt.richardson <= 0) return len * d1;
  const Eigen::VectorXd d2 = diff(0.5 * step);
  const Eigen::VectorXd r1 = (4.0 * d2 - d1) / 3.0;
  if (opt.richardson == 1) return len * r1;
  const Eigen::VectorXd d4 = diff(0.25 * step);
  const Eigen::VectorXd r2 = (4.0 * d4 - d2) / 3.0;
  return len * (16.0 * r2 - r1) / 15.0;
}

}  // namespace

Field lie_bracket(const Field& T, const Field& V, const BracketOptions& opt) {
  if (!(opt.step > 0.0)) throw std::invalid_argument("lie_bracket: step must be positive");
  if (opt.richardson < 0 || opt.richardson > 2) throw std::invalid_argument("lie_bracket: richardson must be 0, 1 or 2");
  Field out;
  out.time_component = 0.0;  // brackets of fields with constant time parts
  out.constant = T.constant && V.constant;
  if (out.constant) {
    out.eval = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(x.size()); };
    return out;
  }
  out.eval = [T, V, opt](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(x.size());
    if (!V.constant) r += directional(V, t, x, T.time_component, T(t, x), opt);
    if (!T.constant) r -= directional(T, t, x, V.time_component, V(t, x), opt);
    return r;
  };
  return out;
}

namespace {
void check_box(const model::Box& box, const Eigen::VectorXd& x) {
  if (!box.contains(x)) throw ComputationError("bracket stencil exits working box");
}
}  // namespace

Field drift_field(const model::StochasticSystem& sys) {
  Field f;
  f.time_component = 1.0;
  f.eval = [&sys, box = sys.working_box()](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    check_box(box, x);
    return sys.stratonovich_drift(t, x);
  };
  return f;
}

Field diffusion_field(const model::StochasticSystem& sys) {
  Field f;
  f.time_component = 0.0;
  f.constant = sys.noise().kind() == model::NoiseSpec::Kind::ou;
  f.eval = [&sys, box = sys.working_box()](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    check_box(box, x);
    return sys.diffusion(x);
  };
  return f;
}

double symmetric_lambda_min(const Eigen::MatrixXd& G) {
  const Eigen::MatrixXd S = 0.5 * (G + G.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

namespace {
// lambda_min of sum f f^T as the squared smallest singular value of the
// stacked fields; keeps the digits the explicit Gram product would lose.
double stacked_lambda_min(const std::vector<Eigen::VectorXd>& fields, Eigen::Index m) {
  if (static_cast<Eigen::Index>(fields.size()) < m) return 0.0;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(fields.size()), m);
  for (std::size_t i = 0; i < fields.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = fields[i].transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const double s = svd.singularValues()[m - 1];
  return s * s;
}

void check_start(const model::StochasticSystem& sys, const Eigen::VectorXd& x, const char* what) {
  if (x.size() != static_cast<Eigen::Index>(sys.dimension())) {
    throw std::invalid_argument(std::string(what) + ": state dimension mismatch");
  }
  const auto box = sys.working_box();
  if (!box.contains(x)) throw std::invalid_argument(std::string(what) + ": point outside the working box");
}
}  // namespace

BracketSet numeric_brackets(const model::StochasticSystem& sys, double t, const Eigen::VectorXd& x, int order,
                            const BracketOptions& opt) {
  if (order < 0 || order > 6) throw std::invalid_argument("numeric_brackets: order must be in 0..6");
  check_start(sys, x, "numeric_brackets");
  const Field A0 = drift_field(sys);
  const Field A1 = diffusion_field(sys);
  BracketOptions o = opt;
  if (!o.box) o.box = sys.working_box();
  BracketSet out;
  out.t = t;
  out.x = x;
  out.A1 = A1(t, x);
  out.gram = out.A1 * out.A1.transpose();
  std::vector<Eigen::VectorXd> fields = {out.A1};
  Field L = A0;
  for (int k = 1; k <= order; ++k) {
    L = lie_bracket(A1, L, o);
    out.L.push_back(L(t, x));
    out.gram += out.L.back() * out.L.back().transpose();
    fields.push_back(out.L.back());
  }
  out.lambda_min = stacked_lambda_min(fields, out.A1.size());
  return out;
}

int multi_index_norm(const MultiIndex& a) {
  int n = 0;
  for (int letter : a) n += letter == 0 ? 2 : 1;
  return n;
}

std::vector<MultiIndex> enumerate_multi_indices(int n_max) {
  std::vector<MultiIndex> out;
  std::vector<MultiIndex> frontier = {{}};
  out.push_back({});
  while (!frontier.empty()) {
    std::vector<MultiIndex> next;
    for (const auto& a : frontier) {
      for (int letter : {0, 1}) {
        if (a.empty() && letter == 1) continue;
        MultiIndex b = a;
        b.push_back(letter);
        if (multi_index_norm(b) > n_max) continue;
        out.push_back(b);
        next.push_back(std::move(b));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

QuadraticForm v_quadratic_form(const model::StochasticSystem& sys, double t, const Eigen::VectorXd& x, int L,
                               const BracketOptions& opt) {
  if (L < 1 || L > 7) throw std::invalid_argument("v_quadratic_form: L must be in 1..7");
  check_start(sys, x, "v_quadratic_form");
  const Field A[2] = {drift_field(sys), diffusion_field(sys)};
  BracketOptions o = opt;
  if (!o.box) o.box = sys.working_box();
  const auto m = static_cast<Eigen::Index>(sys.dimension());
  QuadraticForm q;
  q.gram = Eigen::MatrixXd::Zero(m, m);
  // Breadth-first over the multi-index tree, reusing the parent's field.
  struct Node {
    MultiIndex alpha;
    Field field;
  };
  std::vector<Eigen::VectorXd> fields;
  std::vector<Node> frontier = {{{}, A[1]}};
  while (!frontier.empty()) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      const Eigen::VectorXd f = node.field(t, x);
      q.gram += f * f.transpose();
      fields.push_back(f);
      ++q.field_count;
      for (int letter : {0, 1}) {
        if (node.alpha.empty() && letter == 1) continue;
        MultiIndex b = node.alpha;
        b.push_back(letter);
        if (multi_index_norm(b) > L - 1) continue;
        next.push_back({std::move(b), lie_bracket(A[letter], node.field, o)});
      }
    }
    frontier = std::move(next);
  }
  q.lambda_min = stacked_lambda_min(fields, m);
  q.value = std::min(std::max(q.lambda_min, 0.0), 1.0);
  return q;
}

}  // namespace weakh::hoermander
