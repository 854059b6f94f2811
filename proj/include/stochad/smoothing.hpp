#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>

#include "stochad/evaluation.hpp"
#include "stochad/triple.hpp"

namespace stochad {

/// A value with a smoothed stochastic derivative: the jump structure of a
/// stochastic triple replaced by its conditional expectation given the
/// primal value. Propagates by the ordinary chain rule.
struct SmoothedDual {
  double value = 0.0;
  double sderiv = 0.0;

  SmoothedDual() = default;
  SmoothedDual(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  SmoothedDual(double v, double d) : value(v), sderiv(d) {}

  friend bool operator==(const SmoothedDual&, const SmoothedDual&) = default;
};

std::ostream& operator<<(std::ostream& os, const SmoothedDual& x);

inline double primal_value(const SmoothedDual& x) { return x.value; }

inline SmoothedDual operator+(const SmoothedDual& a, const SmoothedDual& b) {
  return {a.value + b.value, a.sderiv + b.sderiv};
}
inline SmoothedDual operator-(const SmoothedDual& a, const SmoothedDual& b) {
  return {a.value - b.value, a.sderiv - b.sderiv};
}
inline SmoothedDual operator*(const SmoothedDual& a, const SmoothedDual& b) {
  return {a.value * b.value, a.sderiv * b.value + a.value * b.sderiv};
}
inline SmoothedDual operator/(const SmoothedDual& a, const SmoothedDual& b) {
  const double q = a.value / b.value;
  return {q, (a.sderiv - q * b.sderiv) / b.value};
}
inline SmoothedDual operator-(const SmoothedDual& a) { return {-a.value, -a.sderiv}; }

inline SmoothedDual& operator+=(SmoothedDual& a, const SmoothedDual& b) { return a = a + b; }
inline SmoothedDual& operator-=(SmoothedDual& a, const SmoothedDual& b) { return a = a - b; }
inline SmoothedDual& operator*=(SmoothedDual& a, const SmoothedDual& b) { return a = a * b; }
inline SmoothedDual& operator/=(SmoothedDual& a, const SmoothedDual& b) { return a = a / b; }

inline SmoothedDual exp(const SmoothedDual& x) {
  const double e = std::exp(x.value);
  return {e, e * x.sderiv};
}
inline SmoothedDual log(const SmoothedDual& x) { return {std::log(x.value), x.sderiv / x.value}; }
inline SmoothedDual sqrt(const SmoothedDual& x) {
  const double r = std::sqrt(x.value);
  return {r, 0.5 * x.sderiv / r};
}
inline SmoothedDual pow(const SmoothedDual& x, double e) {
  return {std::pow(x.value, e), e * std::pow(x.value, e - 1.0) * x.sderiv};
}
inline SmoothedDual square(const SmoothedDual& x) { return x * x; }
inline SmoothedDual cube(const SmoothedDual& x) { return {x.value * x.value * x.value, 3.0 * x.value * x.value * x.sderiv}; }

// Stop-gradient: same value, zero derivative.
inline SmoothedDual frozen(const SmoothedDual& x) { return {x.value, 0.0}; }

/// Collapses a triple to (value, δ + w·Δ) with the mode's sign convention.
/// Samplers in this library emit at most one jump direction per draw, so
/// this equals the closed-form conditional expectation for single draws.
SmoothedDual smooth_collapse(const StochasticTriple& st, DerivativeMode mode = DerivativeMode::right);

/// Smoothed derivative of a Bernoulli draw with outcome x:
///   right:            p'/(1-p) if x = 0, else 0
///   left:             p'/p     if x = 1, else 0
///   straight_through: p'       (the mixture (1-p)·left + p·right)
SmoothedDual smooth_bernoulli(const SmoothedDual& p, std::int64_t x, SmoothingFlavor flavor);

/// Weight factor with primal value 1 and derivative p'/p, used to carry
/// the resampling contribution of a particle filter.
SmoothedDual new_weight(const SmoothedDual& p);

}  // namespace stochad
