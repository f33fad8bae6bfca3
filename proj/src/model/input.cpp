#include "weakh/model/input.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace weakh::model {

using nlohmann::json;

InputSignal InputSignal::constant(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("constant input must be finite");
  InputSignal s;
  s.kind_ = Kind::constant;
  s.a_ = c;
  return s;
}

InputSignal InputSignal::sinusoid(double amplitude, double period) {
  if (!(amplitude > 0.0) || !(period > 0.0)) {
    throw std::invalid_argument("sinusoid input needs amplitude > 0 and period > 0");
  }
  InputSignal s;
  s.kind_ = Kind::sinusoid;
  s.a_ = amplitude;
  s.period_ = period;
  return s;
}

InputSignal InputSignal::table(std::vector<double> times, std::vector<double> values) {
  if (times.empty() || times.size() != values.size()) {
    throw std::invalid_argument("table input needs matching, non-empty time and value arrays");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("table input times must increase strictly");
  }
  InputSignal s;
  s.kind_ = Kind::table;
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

double InputSignal::operator()(double t) const {
  switch (kind_) {
    case Kind::constant: return a_;
    case Kind::sinusoid: return a_ * (1.0 + std::sin(2.0 * std::numbers::pi * t / period_));
    case Kind::table: {
      if (t <= times_.front()) return values_.front();
      if (t >= times_.back()) return values_.back();
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - times_.begin());
      const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
      return values_[i - 1] + w * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

double InputSignal::primitive(double t) const {
  switch (kind_) {
    case Kind::constant: return a_ * t;
    case Kind::sinusoid: {
      const double w = 2.0 * std::numbers::pi / period_;
      return a_ * (t + (1.0 - std::cos(w * t)) / w);
    }
    case Kind::table: {
      // Integral from times_.front(); constant extension on both sides.
      const double t0 = times_.front();
      if (t <= t0) return values_.front() * (t - t0);
      double acc = 0.0;
      for (std::size_t i = 1; i < times_.size(); ++i) {
        if (t <= times_[i]) {
          const double mid = (*this)(t);
          return acc + 0.5 * (values_[i - 1] + mid) * (t - times_[i - 1]);
        }
        acc += 0.5 * (values_[i - 1] + values_[i]) * (times_[i] - times_[i - 1]);
      }
      return acc + values_.back() * (t - times_.back());
    }
  }
  return 0.0;
}

double InputSignal::integral(double t0, double t1) const { return primitive(t1) - primitive(t0); }

double InputSignal::sup_abs() const {
  switch (kind_) {
    case Kind::constant: return std::abs(a_);
    case Kind::sinusoid: return 2.0 * std::abs(a_);
    case Kind::table: {
      double s = 0.0;
      for (double v : values_) s = std::max(s, std::abs(v));
      return s;
    }
  }
  return 0.0;
}

json InputSignal::to_json() const {
  switch (kind_) {
    case Kind::constant: return {{"kind", "constant"}, {"value", a_}};
    case Kind::sinusoid: return {{"kind", "sinusoid"}, {"amplitude", a_}, {"period", period_}};
    case Kind::table: return {{"kind", "table"}, {"times", times_}, {"values", values_}};
  }
  return {};
}

InputSignal InputSignal::from_json(const json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("input: expected {\"kind\": ...}");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    for (const auto& [k, _] : j.items())
      if (k != "kind" && k != "value") throw std::invalid_argument("input: unknown key '" + k + "'");
    return constant(j.at("value").get<double>());
  }
  if (kind == "sinusoid") {
    for (const auto& [k, _] : j.items())
      if (k != "kind" && k != "amplitude" && k != "period") throw std::invalid_argument("input: unknown key '" + k + "'");
    return sinusoid(j.at("amplitude").get<double>(), j.at("period").get<double>());
  }
  if (kind == "table") {
    for (const auto& [k, _] : j.items())
      if (k != "kind" && k != "times" && k != "values") throw std::invalid_argument("input: unknown key '" + k + "'");
    return table(j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
  }
  throw std::invalid_argument("input: unknown kind '" + kind + "'");
}

NoiseSpec NoiseSpec::ou(double tau, double gamma, InputSignal signal) {
  if (!(tau > 0.0)) throw std::invalid_argument("OU noise needs tau > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("OU noise needs gamma >= 0");
  NoiseSpec n;
  n.kind_ = Kind::ou;
  n.tau_ = tau;
  n.gamma_ = gamma;
  n.signal_ = std::move(signal);
  return n;
}

NoiseSpec NoiseSpec::cir(double tau, double gamma, double K, InputSignal signal) {
  if (!(tau > 0.0)) throw std::invalid_argument("CIR noise needs tau > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("CIR noise needs gamma >= 0");
  if (!(K > 0.5 * gamma * gamma + signal.sup_abs())) {
    throw std::invalid_argument("CIR noise needs K > gamma^2/2 + sup|S|");
  }
  NoiseSpec n;
  n.kind_ = Kind::cir;
  n.tau_ = tau;
  n.gamma_ = gamma;
  n.K_ = K;
  n.signal_ = std::move(signal);
  return n;
}

NoiseSpec NoiseSpec::generic(DriftFn drift, ScalarFn sigma, ScalarFn dsigma, Interval U, std::string label) {
  if (!drift || !sigma || !dsigma) throw std::invalid_argument("generic noise needs drift, sigma and dsigma");
  if (!(U.lo < U.hi)) throw std::invalid_argument("generic noise needs a non-empty state interval");
  NoiseSpec n;
  n.kind_ = Kind::generic;
  n.drift_fn_ = std::move(drift);
  n.sigma_fn_ = std::move(sigma);
  n.dsigma_fn_ = std::move(dsigma);
  n.interval_ = U;
  n.label_ = std::move(label);
  return n;
}

double NoiseSpec::drift(double t, double x) const {
  if (kind_ == Kind::generic) return drift_fn_(t, x);
  return (signal_(t) - x) * tau_;
}

double NoiseSpec::sigma(double x) const {
  switch (kind_) {
    case Kind::ou: return gamma_ * std::sqrt(tau_);
    case Kind::cir: return gamma_ * std::sqrt(std::max(x + K_, 0.0)) * std::sqrt(tau_);
    case Kind::generic: return sigma_fn_(x);
  }
  return 0.0;
}

double NoiseSpec::dsigma(double x) const {
  switch (kind_) {
    case Kind::ou: return 0.0;
    case Kind::cir: {
      const double r = x + K_;
      return r > 0.0 ? 0.5 * gamma_ * std::sqrt(tau_) / std::sqrt(r) : 0.0;
    }
    case Kind::generic: return dsigma_fn_(x);
  }
  return 0.0;
}

Interval NoiseSpec::state_interval() const {
  switch (kind_) {
    case Kind::ou: return {};
    case Kind::cir: return {-K_, std::numeric_limits<double>::infinity()};
    case Kind::generic: return interval_;
  }
  return {};
}

NoiseSpec NoiseSpec::with_gamma(double gamma) const {
  switch (kind_) {
    case Kind::ou: return ou(tau_, gamma, signal_);
    case Kind::cir: return cir(tau_, gamma, K_, signal_);
    case Kind::generic: break;
  }
  throw std::invalid_argument("with_gamma: generic noise has no gamma");
}

std::string NoiseSpec::fingerprint() const {
  if (kind_ == Kind::generic) return "generic:" + label_;
  return to_json().dump();
}

json NoiseSpec::to_json() const {
  switch (kind_) {
    case Kind::ou: return {{"kind", "ou"}, {"tau", tau_}, {"gamma", gamma_}, {"signal", signal_.to_json()}};
    case Kind::cir:
      return {{"kind", "cir"}, {"tau", tau_}, {"gamma", gamma_}, {"K", K_}, {"signal", signal_.to_json()}};
    case Kind::generic: return {{"kind", "generic"}, {"label", label_}};
  }
  return {};
}

NoiseSpec NoiseSpec::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("noise: expected {\"kind\": ...}");
  const auto kind = j.at("kind").get<std::string>();
  for (const auto& [k, _] : j.items()) {
    if (k != "kind" && k != "tau" && k != "gamma" && k != "K" && k != "signal") {
      throw std::invalid_argument("noise: unknown key '" + k + "'");
    }
  }
  const double tau = j.value("tau", 1.0);
  const double gamma = j.value("gamma", 1.0);
  const InputSignal signal = j.contains("signal") ? InputSignal::from_json(j.at("signal")) : InputSignal::constant(0.0);
  if (kind == "ou") return ou(tau, gamma, signal);
  if (kind == "cir") {
    if (!j.contains("K")) throw std::invalid_argument("noise: CIR needs 'K'");
    return cir(tau, gamma, j.at("K").get<double>(), signal);
  }
  throw std::invalid_argument("noise: kind must be 'ou' or 'cir' in configuration files");
}

}  // namespace weakh::model
