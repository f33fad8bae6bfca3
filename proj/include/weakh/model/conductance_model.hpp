#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "weakh/model/hh.hpp"
#include "weakh/model/membrane_model.hpp"
#include "weakh/model/rate_expr.hpp"

namespace weakh::model {

struct Channel {
  std::string name;
  RateExpr a;  // decay rate a_i(v) > 0
  RateExpr b;  // source term, 0 <= b_i(v) <= a_i(v)
};

/// One Ohmic current gain * prod_j p_j^exponents[j] * (v - reversal).
struct ConductanceTerm {
  double gain = 0.0;
  std::vector<int> exponents;
  double reversal = 0.0;
};

/// Generic conductance-based membrane model
///
///   C dv = -[ sum_i G_i(p) (v - V_i) + G_L (v - V_L) ] dt + d(input)
///   dp_j = (-a_j(v) p_j + b_j(v)) dt
///
/// Construction validates the kinetics on the working voltage range.
class ConductanceModel final : public MembraneModel {
 public:
  ConductanceModel(std::string name, double capacitance, std::vector<Channel> channels,
                   std::vector<ConductanceTerm> terms, double leak_gain, double leak_reversal,
                   double v_min = -100.0, double v_max = 150.0);

  const std::string& name() const { return name_; }
  const std::vector<Channel>& channels() const { return channels_; }
  const std::vector<ConductanceTerm>& terms() const { return terms_; }
  double leak_gain() const { return leak_gain_; }
  double leak_reversal() const { return leak_reversal_; }
  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }

  /// Sum of channel conductances plus leak at gating state p.
  double total_conductance(std::span<const double> p) const;

  std::size_t channel_count() const override { return channels_.size(); }
  double capacitance() const override { return capacitance_; }
  double voltage_drift(double v, std::span<const double> p) const override;
  double voltage_slope(std::span<const double> p) const override;
  void voltage_gradient(double v, std::span<const double> p, std::span<double> grad) const override;
  void kinetics(double v, std::span<double> a, std::span<double> b) const override;
  void kinetics(const Jet4& v, std::span<Jet4> a, std::span<Jet4> b) const override;
  std::string fingerprint() const override;

  nlohmann::json to_json() const;
  static ConductanceModel from_json(const nlohmann::json& j);

  std::string dump() const;
  static ConductanceModel parse(const std::string& text);
  static ConductanceModel load(const std::string& path);
  void save(const std::string& path) const;

 private:
  void validate() const;

  std::string name_;
  double capacitance_;
  std::vector<Channel> channels_;
  std::vector<ConductanceTerm> terms_;
  double leak_gain_;
  double leak_reversal_;
  double v_min_;
  double v_max_;
};

/// Hodgkin-Huxley written as a conductance model (k = 3: n, m, h).
ConductanceModel build_hh_as_conductance_model(const HHParams& params = {});

}  // namespace weakh::model
