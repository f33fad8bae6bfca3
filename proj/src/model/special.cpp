#include "weakh/model/special.hpp"

#include <array>
#include <cmath>

namespace weakh::model {
namespace {

// B_n / n! for n = 0..24 (generating function x / (e^x - 1)).
constexpr std::array<double, 25> kBernoulliOverFactorial = {
    1.0,
    -0.5,
    1.0 / 12.0,
    0.0,
    -1.0 / 720.0,
    0.0,
    1.0 / 30240.0,
    0.0,
    -1.0 / 1209600.0,
    0.0,
    1.0 / 47900160.0,
    0.0,
    -691.0 / 1307674368000.0,
    0.0,
    1.0 / 74724249600.0,
    0.0,
    -3617.0 / 10670622842880000.0,
    0.0,
    43867.0 / 5109094217170944000.0,
    0.0,
    -174611.0 / 802857662698291200000.0,
    0.0,
    77683.0 / 14101100039391805440000.0,
    0.0,
    -236364091.0 / 1693824136731743669452800000.0,
};

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Taylor coefficients of x / (e^x - 1) at x0 from the power series at 0.
std::array<double, Jet4::order + 1> series_coefficients(double x0) {
  std::array<double, Jet4::order + 1> out{};
  for (std::size_t j = 0; j <= Jet4::order; ++j) {
    double s = 0.0;
    // Summing from high n to low keeps the small tail terms from being lost.
    for (std::size_t n = kBernoulliOverFactorial.size() - 1; n + 1 > j; --n) {
      if (kBernoulliOverFactorial[n] == 0.0) continue;
      s += kBernoulliOverFactorial[n] * binomial(n, j) * std::pow(x0, static_cast<double>(n - j));
    }
    out[j] = s;
  }
  return out;
}

}  // namespace

double x_over_expm1(double x) {
  if (std::abs(x) < kQuotientSeriesBand) {
    const double x2 = x * x;
    return 1.0 - 0.5 * x + x2 * (1.0 / 12.0 + x2 * (-1.0 / 720.0 + x2 * (1.0 / 30240.0)));
  }
  return x / std::expm1(x);
}

Jet4 x_over_expm1(const Jet4& x) {
  const double x0 = x.value();
  Jet4 r;
  if (std::abs(x0) < kQuotientJetSeriesBand) {
    r = compose(series_coefficients(x0), x);
  } else {
    r = x / expm1(x);
  }
  r.c[0] = x_over_expm1(x0);
  return r;
}

}  // namespace weakh::model
