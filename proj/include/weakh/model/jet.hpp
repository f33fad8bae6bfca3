#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace weakh::model {

/// Truncated Taylor expansion of a scalar function of one variable around a
/// point: coefficient c[k] is f^(k)(x0) / k!, k = 0..4.
///
/// All arithmetic follows the Leibniz / exponential recurrences exactly, so a
/// jet seeded with Jet4::variable(x0) carries the first four derivatives of
/// any expression built from the supported operations.
struct Jet4 {
  static constexpr std::size_t order = 4;
  std::array<double, order + 1> c{};

  constexpr Jet4() = default;
  constexpr explicit Jet4(double value) : c{value, 0.0, 0.0, 0.0, 0.0} {}

  static constexpr Jet4 constant(double value) { return Jet4(value); }
  static constexpr Jet4 variable(double x0) {
    Jet4 j(x0);
    j.c[1] = 1.0;
    return j;
  }

  constexpr double value() const { return c[0]; }

  /// k-th derivative, k! * c[k].
  constexpr double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f * c[k];
  }

  constexpr Jet4 operator-() const {
    Jet4 r;
    for (std::size_t k = 0; k <= order; ++k) r.c[k] = -c[k];
    return r;
  }

  constexpr Jet4& operator+=(const Jet4& o) {
    for (std::size_t k = 0; k <= order; ++k) c[k] += o.c[k];
    return *this;
  }
  constexpr Jet4& operator-=(const Jet4& o) {
    for (std::size_t k = 0; k <= order; ++k) c[k] -= o.c[k];
    return *this;
  }
  constexpr Jet4& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  constexpr Jet4& operator+=(double s) {
    c[0] += s;
    return *this;
  }
};

constexpr Jet4 operator+(Jet4 a, const Jet4& b) { return a += b; }
constexpr Jet4 operator-(Jet4 a, const Jet4& b) { return a -= b; }
constexpr Jet4 operator+(Jet4 a, double s) { return a += s; }
constexpr Jet4 operator+(double s, Jet4 a) { return a += s; }
constexpr Jet4 operator-(Jet4 a, double s) { return a += -s; }
constexpr Jet4 operator-(double s, const Jet4& a) { return (-a) + s; }
constexpr Jet4 operator*(Jet4 a, double s) { return a *= s; }
constexpr Jet4 operator*(double s, Jet4 a) { return a *= s; }

constexpr Jet4 operator*(const Jet4& a, const Jet4& b) {
  Jet4 r;
  for (std::size_t k = 0; k <= Jet4::order; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i <= k; ++i) s += a.c[i] * b.c[k - i];
    r.c[k] = s;
  }
  return r;
}

constexpr Jet4 operator/(const Jet4& a, const Jet4& b) {
  Jet4 q;
  for (std::size_t k = 0; k <= Jet4::order; ++k) {
    double s = a.c[k];
    for (std::size_t i = 0; i < k; ++i) s -= q.c[i] * b.c[k - i];
    q.c[k] = s / b.c[0];
  }
  return q;
}

constexpr Jet4 operator/(const Jet4& a, double s) { return a * (1.0 / s); }
constexpr Jet4 operator/(double s, const Jet4& b) { return Jet4(s) / b; }

namespace detail {
// e = exp(a) with e.c[0] supplied by the caller; the recurrence
// k e_k = sum_{i=1..k} i a_i e_{k-i} holds for exp and for expm1 alike.
inline Jet4 exp_tail(const Jet4& a, double e0, double exp_a0) {
  Jet4 e;
  e.c[0] = exp_a0;
  for (std::size_t k = 1; k <= Jet4::order; ++k) {
    double s = 0.0;
    for (std::size_t i = 1; i <= k; ++i) s += static_cast<double>(i) * a.c[i] * e.c[k - i];
    e.c[k] = s / static_cast<double>(k);
  }
  e.c[0] = e0;
  return e;
}
}  // namespace detail

inline Jet4 exp(const Jet4& a) {
  const double e0 = std::exp(a.c[0]);
  return detail::exp_tail(a, e0, e0);
}

inline Jet4 expm1(const Jet4& a) {
  return detail::exp_tail(a, std::expm1(a.c[0]), std::exp(a.c[0]));
}

inline Jet4 pow(const Jet4& a, int n) {
  Jet4 r(1.0);
  for (int i = 0; i < n; ++i) r = r * a;
  return r;
}

/// Composition f(inner) where `outer` holds the Taylor coefficients of f at
/// inner.value().
inline Jet4 compose(const std::array<double, Jet4::order + 1>& outer, const Jet4& inner) {
  Jet4 delta = inner;
  delta.c[0] = 0.0;
  Jet4 result(outer[0]);
  Jet4 power(1.0);
  for (std::size_t j = 1; j <= Jet4::order; ++j) {
    power = power * delta;
    result += power * outer[j];
  }
  return result;
}

}  // namespace weakh::model
