#include "weakh/model/conductance_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "weakh/util/error.hpp"

namespace weakh::model {

using nlohmann::json;

namespace {

constexpr int kValidationSamples = 501;

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("conductance model: missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

ConductanceModel::ConductanceModel(std::string name, double capacitance, std::vector<Channel> channels,
                                   std::vector<ConductanceTerm> terms, double leak_gain, double leak_reversal,
                                   double v_min, double v_max)
    : name_(std::move(name)),
      capacitance_(capacitance),
      channels_(std::move(channels)),
      terms_(std::move(terms)),
      leak_gain_(leak_gain),
      leak_reversal_(leak_reversal),
      v_min_(v_min),
      v_max_(v_max) {
  validate();
}

void ConductanceModel::validate() const {
  if (!(capacitance_ > 0.0)) throw std::invalid_argument("conductance model: capacitance must be positive");
  if (channels_.empty()) throw std::invalid_argument("conductance model: needs at least one channel");
  if (!(v_min_ < v_max_)) throw std::invalid_argument("conductance model: empty working range");
  // Gains >= 0 with a positive leak keeps sum_i G_i(p) + G_L > 0 on [0,1]^k.
  if (!(leak_gain_ > 0.0)) throw std::invalid_argument("conductance model: leak conductance must be positive");
  for (const auto& t : terms_) {
    if (!(t.gain >= 0.0) || !std::isfinite(t.reversal)) {
      throw std::invalid_argument("conductance model: term gains must be >= 0 and reversals finite");
    }
    if (t.exponents.size() != channels_.size()) {
      throw std::invalid_argument("conductance model: exponent pattern length must equal channel count");
    }
    for (int e : t.exponents) {
      if (e < 0) throw std::invalid_argument("conductance model: negative exponent");
    }
  }
  for (int s = 0; s < kValidationSamples; ++s) {
    const double v = v_min_ + (v_max_ - v_min_) * s / (kValidationSamples - 1);
    for (const auto& ch : channels_) {
      const double a = ch.a(v);
      const double b = ch.b(v);
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("conductance model: channel '" + ch.name + "' has a(v) <= 0 at v = " +
                                    std::to_string(v));
      }
      if (!(b >= 0.0 && b <= a * (1.0 + 1e-12))) {
        throw std::invalid_argument("conductance model: channel '" + ch.name +
                                    "' violates 0 <= b(v) <= a(v) at v = " + std::to_string(v));
      }
    }
  }
}

double ConductanceModel::total_conductance(std::span<const double> p) const {
  double g = leak_gain_;
  for (const auto& t : terms_) {
    double w = t.gain;
    for (std::size_t j = 0; j < p.size(); ++j) w *= ipow(p[j], t.exponents[j]);
    g += w;
  }
  return g;
}

double ConductanceModel::voltage_drift(double v, std::span<const double> p) const {
  double current = leak_gain_ * (v - leak_reversal_);
  for (const auto& t : terms_) {
    double w = t.gain;
    for (std::size_t j = 0; j < p.size(); ++j) w *= ipow(p[j], t.exponents[j]);
    current += w * (v - t.reversal);
  }
  return -current / capacitance_;
}

double ConductanceModel::voltage_slope(std::span<const double> p) const {
  return -total_conductance(p) / capacitance_;
}

void ConductanceModel::voltage_gradient(double v, std::span<const double> p, std::span<double> grad) const {
  for (std::size_t j = 0; j < p.size(); ++j) grad[j] = 0.0;
  for (const auto& t : terms_) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (t.exponents[j] == 0) continue;
      double w = t.gain * t.exponents[j] * ipow(p[j], t.exponents[j] - 1);
      for (std::size_t l = 0; l < p.size(); ++l) {
        if (l != j) w *= ipow(p[l], t.exponents[l]);
      }
      grad[j] -= w * (v - t.reversal) / capacitance_;
    }
  }
}

void ConductanceModel::kinetics(double v, std::span<double> a, std::span<double> b) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    a[i] = channels_[i].a(v);
    b[i] = channels_[i].b(v);
  }
}

void ConductanceModel::kinetics(const Jet4& v, std::span<Jet4> a, std::span<Jet4> b) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    a[i] = channels_[i].a(v);
    b[i] = channels_[i].b(v);
  }
}

std::string ConductanceModel::fingerprint() const { return "conductance " + dump(); }

json ConductanceModel::to_json() const {
  json j;
  j["name"] = name_;
  j["capacitance"] = capacitance_;
  json chans = json::array();
  for (const auto& ch : channels_) chans.push_back({{"name", ch.name}, {"a", ch.a.to_json()}, {"b", ch.b.to_json()}});
  j["channels"] = chans;
  json terms = json::array();
  for (const auto& t : terms_) terms.push_back({{"gain", t.gain}, {"exponents", t.exponents}, {"reversal", t.reversal}});
  j["conductances"] = terms;
  j["leak"] = {{"gain", leak_gain_}, {"reversal", leak_reversal_}};
  j["working_range"] = {v_min_, v_max_};
  return j;
}

ConductanceModel ConductanceModel::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("conductance model: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "name" && key != "capacitance" && key != "channels" && key != "conductances" && key != "leak" &&
        key != "working_range") {
      throw std::invalid_argument("conductance model: unknown key '" + key + "'");
    }
  }
  const std::string name = j.contains("name") ? j.at("name").get<std::string>() : std::string("unnamed");
  const double cap = j.contains("capacitance") ? get_number(j, "capacitance") : 1.0;
  if (!j.contains("channels") || !j.at("channels").is_array()) {
    throw std::invalid_argument("conductance model: 'channels' must be an array");
  }
  std::vector<Channel> channels;
  for (const auto& c : j.at("channels")) {
    if (!c.contains("a") || !c.contains("b")) throw std::invalid_argument("conductance model: channel needs 'a' and 'b'");
    channels.push_back({c.value("name", std::string("p") + std::to_string(channels.size() + 1)),
                        RateExpr::from_json(c.at("a")), RateExpr::from_json(c.at("b"))});
  }
  std::vector<ConductanceTerm> terms;
  if (j.contains("conductances")) {
    for (const auto& t : j.at("conductances")) {
      if (!t.contains("exponents") || !t.at("exponents").is_array()) {
        throw std::invalid_argument("conductance model: term needs an 'exponents' array");
      }
      terms.push_back({get_number(t, "gain"), t.at("exponents").get<std::vector<int>>(), get_number(t, "reversal")});
    }
  }
  if (!j.contains("leak")) throw std::invalid_argument("conductance model: missing 'leak'");
  double v_min = -100.0, v_max = 150.0;
  if (j.contains("working_range")) {
    const auto& r = j.at("working_range");
    if (!r.is_array() || r.size() != 2) throw std::invalid_argument("conductance model: working_range must be [lo, hi]");
    v_min = r[0].get<double>();
    v_max = r[1].get<double>();
  }
  return ConductanceModel(name, cap, std::move(channels), std::move(terms), get_number(j.at("leak"), "gain"),
                          get_number(j.at("leak"), "reversal"), v_min, v_max);
}

std::string ConductanceModel::dump() const { return to_json().dump(2); }

ConductanceModel ConductanceModel::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("conductance model: ") + e.what());
  }
  return from_json(j);
}

ConductanceModel ConductanceModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ConductanceModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  out << dump() << '\n';
}

ConductanceModel build_hh_as_conductance_model(const HHParams& params) {
  params.validate();
  // alpha/beta in closed form; a = alpha + beta, b = alpha.
  const auto alpha_n = RateExpr::affine_over_expm1(0.1, -0.01, 1.0, -0.1);
  const auto beta_n = RateExpr::exp_affine(0.125, 0.0, -1.0 / 80.0);
  const auto alpha_m = RateExpr::affine_over_expm1(2.5, -0.1, 2.5, -0.1);
  const auto beta_m = RateExpr::exp_affine(4.0, 0.0, -1.0 / 18.0);
  const auto alpha_h = RateExpr::exp_affine(0.07, 0.0, -1.0 / 20.0);
  const auto beta_h = RateExpr::affine_over_exp_plus1(1.0, 0.0, 3.0, -0.1);

  std::vector<Channel> channels = {
      {"n", RateExpr::sum({alpha_n, beta_n}), alpha_n},
      {"m", RateExpr::sum({alpha_m, beta_m}), alpha_m},
      {"h", RateExpr::sum({alpha_h, beta_h}), alpha_h},
  };
  std::vector<ConductanceTerm> terms = {
      {params.g_K, {4, 0, 0}, params.E_K},
      {params.g_Na, {0, 3, 1}, params.E_Na},
  };
  return ConductanceModel("hodgkin-huxley", 1.0, std::move(channels), std::move(terms), params.g_L, params.E_L);
}

}  // namespace weakh::model
