#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "weakh/model/jet.hpp"

namespace weakh::model {

/// A membrane equation with internal (channel) variables:
///
///   dv = F(v, p) dt + (1/C) d(input)
///   dp_i = (-a_i(v) p_i + b_i(v)) dt,   i = 1..k
///
/// F is the current-balance drift already divided by the capacitance C and is
/// affine in v. State vectors handed to the simulators are laid out as
/// (v, p_1, .., p_k, xi), so the full dimension is k + 2.
class MembraneModel {
 public:
  virtual ~MembraneModel() = default;

  virtual std::size_t channel_count() const = 0;
  virtual double capacitance() const = 0;

  virtual double voltage_drift(double v, std::span<const double> p) const = 0;
  /// dF/dv, independent of v.
  virtual double voltage_slope(std::span<const double> p) const = 0;
  /// dF/dp_j written into `grad` (size k).
  virtual void voltage_gradient(double v, std::span<const double> p, std::span<double> grad) const = 0;

  /// a_i(v), b_i(v) for every channel.
  virtual void kinetics(double v, std::span<double> a, std::span<double> b) const = 0;
  virtual void kinetics(const Jet4& v, std::span<Jet4> a, std::span<Jet4> b) const = 0;

  /// Canonical text used to fingerprint simulation output.
  virtual std::string fingerprint() const = 0;

  std::size_t state_dimension() const { return channel_count() + 2; }
};

}  // namespace weakh::model
