#include "weakh/model/rate_expr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "weakh/model/special.hpp"

namespace weakh::model {

using nlohmann::json;

namespace {

constexpr double kProportionalTolerance = 1e-12;

const char* kind_name(RateExpr::Kind k) {
  switch (k) {
    case RateExpr::Kind::affine: return "affine";
    case RateExpr::Kind::exp_affine: return "exp_affine";
    case RateExpr::Kind::affine_over_expm1: return "affine_over_expm1";
    case RateExpr::Kind::affine_over_exp_plus1: return "affine_over_exp_plus1";
    case RateExpr::Kind::sum: return "sum";
    case RateExpr::Kind::product: return "product";
  }
  return "?";
}

void require_finite(std::initializer_list<double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": coefficients must be finite");
  }
}

double number_at(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("rate expression: missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

std::array<double, 2> pair_at(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2 || !j.at(key)[0].is_number() ||
      !j.at(key)[1].is_number()) {
    throw std::invalid_argument(std::string("rate expression: field '") + key + "' must be [c0, c1]");
  }
  return {j.at(key)[0].get<double>(), j.at(key)[1].get<double>()};
}

}  // namespace

RateExpr::RateExpr(Kind kind, std::array<double, 4> coef, std::vector<RateExpr> children)
    : kind_(kind), coef_(coef), children_(std::move(children)) {}

RateExpr RateExpr::affine(double c0, double c1) {
  require_finite({c0, c1}, "affine");
  return RateExpr(Kind::affine, {c0, c1, 0.0, 0.0});
}

RateExpr RateExpr::exp_affine(double scale, double c0, double c1) {
  require_finite({scale, c0, c1}, "exp_affine");
  return RateExpr(Kind::exp_affine, {scale, c0, c1, 0.0});
}

RateExpr RateExpr::affine_over_expm1(double n0, double n1, double a0, double a1) {
  require_finite({n0, n1, a0, a1}, "affine_over_expm1");
  if (a1 == 0.0) {
    if (a0 == 0.0) throw std::invalid_argument("affine_over_expm1: denominator is identically zero");
  } else {
    // The exponent vanishes at v* = -a0/a1; the numerator must vanish there too.
    const double scale = std::max({std::abs(n0 * a1), std::abs(n1 * a0), 1e-300});
    if (std::abs(n0 * a1 - n1 * a0) > kProportionalTolerance * scale) {
      throw std::invalid_argument(
          "affine_over_expm1: numerator does not vanish with the exponent (rate has a pole)");
    }
  }
  return RateExpr(Kind::affine_over_expm1, {n0, n1, a0, a1});
}

RateExpr RateExpr::affine_over_exp_plus1(double n0, double n1, double a0, double a1) {
  require_finite({n0, n1, a0, a1}, "affine_over_exp_plus1");
  return RateExpr(Kind::affine_over_exp_plus1, {n0, n1, a0, a1});
}

RateExpr RateExpr::sum(std::vector<RateExpr> terms) {
  if (terms.empty()) throw std::invalid_argument("sum: needs at least one term");
  return RateExpr(Kind::sum, {}, std::move(terms));
}

RateExpr RateExpr::product(std::vector<RateExpr> factors) {
  if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
  return RateExpr(Kind::product, {}, std::move(factors));
}

double RateExpr::operator()(double v) const {
  const auto& c = coef_;
  switch (kind_) {
    case Kind::affine: return c[0] + c[1] * v;
    case Kind::exp_affine: return c[0] * std::exp(c[1] + c[2] * v);
    case Kind::affine_over_expm1: {
      const double arg = c[2] + c[3] * v;
      if (c[3] == 0.0) return (c[0] + c[1] * v) / std::expm1(arg);
      return (c[1] / c[3]) * x_over_expm1(arg);
    }
    case Kind::affine_over_exp_plus1: return (c[0] + c[1] * v) / (std::exp(c[2] + c[3] * v) + 1.0);
    case Kind::sum: {
      double s = 0.0;
      for (const auto& t : children_) s += t(v);
      return s;
    }
    case Kind::product: {
      double p = 1.0;
      for (const auto& f : children_) p *= f(v);
      return p;
    }
  }
  return 0.0;
}

Jet4 RateExpr::operator()(const Jet4& v) const {
  const auto& c = coef_;
  switch (kind_) {
    case Kind::affine: return c[0] + c[1] * v;
    case Kind::exp_affine: return c[0] * exp(c[1] + c[2] * v);
    case Kind::affine_over_expm1: {
      const Jet4 arg = c[2] + c[3] * v;
      if (c[3] == 0.0) return (c[0] + c[1] * v) / expm1(arg);
      return (c[1] / c[3]) * x_over_expm1(arg);
    }
    case Kind::affine_over_exp_plus1: return (c[0] + c[1] * v) / (exp(c[2] + c[3] * v) + 1.0);
    case Kind::sum: {
      Jet4 s(0.0);
      for (const auto& t : children_) s += t(v);
      return s;
    }
    case Kind::product: {
      Jet4 p(1.0);
      for (const auto& f : children_) p = p * f(v);
      return p;
    }
  }
  return Jet4{};
}

json RateExpr::to_json() const {
  json j;
  j["type"] = kind_name(kind_);
  const auto& c = coef_;
  switch (kind_) {
    case Kind::affine: j["c0"] = c[0]; j["c1"] = c[1]; break;
    case Kind::exp_affine: j["scale"] = c[0]; j["c0"] = c[1]; j["c1"] = c[2]; break;
    case Kind::affine_over_expm1:
    case Kind::affine_over_exp_plus1:
      j["num"] = {c[0], c[1]};
      j["arg"] = {c[2], c[3]};
      break;
    case Kind::sum:
    case Kind::product: {
      json arr = json::array();
      for (const auto& ch : children_) arr.push_back(ch.to_json());
      j[kind_ == Kind::sum ? "terms" : "factors"] = arr;
      break;
    }
  }
  return j;
}

RateExpr RateExpr::from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw std::invalid_argument("rate expression: expected an object with a string 'type'");
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "affine") return affine(number_at(j, "c0"), number_at(j, "c1"));
  if (type == "exp_affine") return exp_affine(number_at(j, "scale"), number_at(j, "c0"), number_at(j, "c1"));
  if (type == "affine_over_expm1" || type == "affine_over_exp_plus1") {
    const auto num = pair_at(j, "num");
    const auto arg = pair_at(j, "arg");
    return type == "affine_over_expm1" ? affine_over_expm1(num[0], num[1], arg[0], arg[1])
                                       : affine_over_exp_plus1(num[0], num[1], arg[0], arg[1]);
  }
  if (type == "sum" || type == "product") {
    const char* key = type == "sum" ? "terms" : "factors";
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw std::invalid_argument(std::string("rate expression: '") + type + "' needs an array '" + key + "'");
    }
    std::vector<RateExpr> children;
    for (const auto& ch : j.at(key)) children.push_back(from_json(ch));
    return type == "sum" ? sum(std::move(children)) : product(std::move(children));
  }
  throw std::invalid_argument("rate expression: unknown type '" + type + "'");
}

}  // namespace weakh::model
