#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace weakh::model {

/// Deterministic input I(t): constant c, sinusoid a (1 + sin(2 pi t / T)), or
/// a table with linear interpolation (held constant outside the table).
class InputSignal {
 public:
  enum class Kind { constant, sinusoid, table };

  InputSignal() = default;
  static InputSignal constant(double c);
  static InputSignal sinusoid(double amplitude, double period);
  static InputSignal table(std::vector<double> times, std::vector<double> values);

  Kind kind() const { return kind_; }
  double amplitude() const { return a_; }
  double period() const { return period_; }

  double operator()(double t) const;
  /// Integral of I over [t0, t1].
  double integral(double t0, double t1) const;
  double sup_abs() const;

  nlohmann::json to_json() const;
  static InputSignal from_json(const nlohmann::json& j);

 private:
  double primitive(double t) const;

  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double period_ = 1.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Open interval (lo, hi).
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double x) const { return x > lo && x < hi; }
};

/// Law of the random input xi:
///   OU   d xi = (S(t) - xi) tau dt + gamma sqrt(tau) dW,               U = R
///   CIR  d xi = (S(t) - xi) tau dt + gamma sqrt((xi+K) v 0) sqrt(tau) dW, U = (-K, inf)
///   generic  d xi = b(t, xi) dt + sigma(xi) dW on a user interval U.
class NoiseSpec {
 public:
  enum class Kind { ou, cir, generic };

  using DriftFn = std::function<double(double t, double x)>;
  using ScalarFn = std::function<double(double x)>;

  static NoiseSpec ou(double tau, double gamma, InputSignal signal);
  static NoiseSpec cir(double tau, double gamma, double K, InputSignal signal);
  static NoiseSpec generic(DriftFn drift, ScalarFn sigma, ScalarFn dsigma, Interval U, std::string label);

  Kind kind() const { return kind_; }
  double tau() const { return tau_; }
  double gamma() const { return gamma_; }
  double K() const { return K_; }
  const InputSignal& signal() const { return signal_; }

  double drift(double t, double x) const;
  double sigma(double x) const;
  double dsigma(double x) const;
  Interval state_interval() const;

  /// Same law with gamma replaced (OU / CIR only).
  NoiseSpec with_gamma(double gamma) const;

  std::string fingerprint() const;
  nlohmann::json to_json() const;
  static NoiseSpec from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::ou;
  double tau_ = 1.0;
  double gamma_ = 0.0;
  double K_ = 0.0;
  InputSignal signal_;
  DriftFn drift_fn_;
  ScalarFn sigma_fn_;
  ScalarFn dsigma_fn_;
  Interval interval_;
  std::string label_;
};

}  // namespace weakh::model
