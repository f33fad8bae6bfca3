#pragma once

#include "weakh/model/jet.hpp"

namespace weakh::model {

/// Scalar guard band for x / (e^x - 1): inside it the Taylor series through
/// x^6 replaces the 0/0 quotient.
inline constexpr double kQuotientSeriesBand = 1e-3;

/// Jet guard band. Higher Taylor coefficients of the raw quotient lose about
/// log10(1/|x|^k) digits, so jets switch to the Bernoulli series on a wider
/// band where it converges fast (radius 2*pi).
inline constexpr double kQuotientJetSeriesBand = 1.0;

/// x / (e^x - 1), continued by its limit 1 at x = 0.
double x_over_expm1(double x);

/// Jet of x / (e^x - 1) composed with an arbitrary inner jet.
Jet4 x_over_expm1(const Jet4& x);

}  // namespace weakh::model
