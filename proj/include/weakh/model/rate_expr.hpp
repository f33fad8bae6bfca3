#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "weakh/model/jet.hpp"

namespace weakh::model {

/// Closed-form rate function of the membrane potential, built from
///
///   affine                 c0 + c1 v
///   exp_affine             s * exp(c0 + c1 v)
///   affine_over_expm1      (n0 + n1 v) / (exp(a0 + a1 v) - 1)
///   affine_over_exp_plus1  (n0 + n1 v) / (exp(a0 + a1 v) + 1)
///   sum, product           of other expressions
///
/// An affine_over_expm1 node must vanish together with its denominator
/// (numerator proportional to the exponent); that is the only way the
/// quotient stays analytic, and it is evaluated through x / (e^x - 1).
class RateExpr {
 public:
  enum class Kind { affine, exp_affine, affine_over_expm1, affine_over_exp_plus1, sum, product };

  static RateExpr affine(double c0, double c1);
  static RateExpr exp_affine(double scale, double c0, double c1);
  static RateExpr affine_over_expm1(double n0, double n1, double a0, double a1);
  static RateExpr affine_over_exp_plus1(double n0, double n1, double a0, double a1);
  static RateExpr sum(std::vector<RateExpr> terms);
  static RateExpr product(std::vector<RateExpr> factors);

  Kind kind() const { return kind_; }

  double operator()(double v) const;
  Jet4 operator()(const Jet4& v) const;

  nlohmann::json to_json() const;
  static RateExpr from_json(const nlohmann::json& j);

 private:
  RateExpr(Kind kind, std::array<double, 4> coef, std::vector<RateExpr> children = {});

  Kind kind_;
  std::array<double, 4> coef_{};
  std::vector<RateExpr> children_;
};

}  // namespace weakh::model
