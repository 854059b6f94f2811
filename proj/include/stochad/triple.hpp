#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>

#include "stochad/errors.hpp"
#include "stochad/evaluation.hpp"

namespace stochad {

/// Value of a stochastic program together with its stochastic derivative:
/// the primal sample, an infinitesimal dual part, and at most one finite
/// perturbation that occurs with infinitesimal probability. Printed as
/// "x + δε + (Δ with probability wε)".
struct StochasticTriple {
  double value = 0.0;
  double delta = 0.0;
  std::optional<Perturbation> pert;

  StochasticTriple() = default;
  // Constants lift implicitly so generic programs can mix literals and triples.
  StochasticTriple(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  StochasticTriple(double v, double d, std::optional<Perturbation> p = std::nullopt)
      : value(v), delta(d), pert(p) {}

  // No dual part and no live perturbation.
  bool is_deterministic() const;
};

std::ostream& operator<<(std::ostream& os, const StochasticTriple& st);

// Seeds a program input: value p, unit dual part, no perturbation.
StochasticTriple make_input(double p);

// delta + w * Δ, with the weight signed by the derivative mode. Uses the
// active evaluation's view of the perturbation when one is active.
double derivative_contribution(const StochasticTriple& st, DerivativeMode mode = DerivativeMode::right);

inline double primal_value(double x) { return x; }
inline double primal_value(const StochasticTriple& x) { return x.value; }

namespace detail {

inline void require_finite(double v, const char* op, const char* point) {
  if (!std::isfinite(v)) {
    throw EvaluationError(std::string(op) + ": non-finite result at the " + point + " point");
  }
}

inline double shifted(const StochasticTriple& x, const std::optional<Perturbation>& resolved,
                      const std::optional<Perturbation>& chosen) {
  if (resolved && chosen && resolved->tag == chosen->tag) return x.value + resolved->delta;
  return x.value;
}

}  // namespace detail

/// Lifts a smooth scalar function: (f(x), f'(x)δ, f(x+Δ) - f(x) with the same weight and tag).
template <class F, class DF>
StochasticTriple lift_smooth(F&& f, DF&& df, const StochasticTriple& x, const char* name = "lift_smooth") {
  const double fx = f(x.value);
  detail::require_finite(fx, name, "primal");
  StochasticTriple out(fx, x.delta == 0.0 ? 0.0 : df(x.value) * x.delta);
  detail::require_finite(out.delta, name, "primal");
  if (auto p = resolve_active(x.pert)) {
    const double alt = f(x.value + p->delta);
    detail::require_finite(alt, name, "alternate");
    out.pert = Perturbation{alt - fx, p->weight, p->tag};
  }
  return out;
}

/// Binary counterpart of lift_smooth. When both arguments carry perturbations
/// with different tags, one is pruned and the alternate value is computed
/// with only the survivor's argument shifted; equal tags shift both.
template <class F, class DFA, class DFB>
StochasticTriple lift_binary(F&& f, DFA&& dfa, DFB&& dfb, const StochasticTriple& a, const StochasticTriple& b,
                             const char* name = "lift_binary") {
  const double fx = f(a.value, b.value);
  detail::require_finite(fx, name, "primal");
  double d = 0.0;
  if (a.delta != 0.0) d += dfa(a.value, b.value) * a.delta;
  if (b.delta != 0.0) d += dfb(a.value, b.value) * b.delta;
  detail::require_finite(d, name, "primal");
  StochasticTriple out(fx, d);
  const auto pa = resolve_active(a.pert);
  const auto pb = resolve_active(b.pert);
  if (const auto chosen = select_active(pa, pb)) {
    const double alt = f(detail::shifted(a, pa, chosen), detail::shifted(b, pb, chosen));
    detail::require_finite(alt, name, "alternate");
    out.pert = Perturbation{alt - fx, chosen->weight, chosen->tag};
  }
  return out;
}

StochasticTriple operator+(const StochasticTriple& a, const StochasticTriple& b);
StochasticTriple operator-(const StochasticTriple& a, const StochasticTriple& b);
StochasticTriple operator*(const StochasticTriple& a, const StochasticTriple& b);
StochasticTriple operator/(const StochasticTriple& a, const StochasticTriple& b);
StochasticTriple operator-(const StochasticTriple& a);

inline StochasticTriple& operator+=(StochasticTriple& a, const StochasticTriple& b) { return a = a + b; }
inline StochasticTriple& operator-=(StochasticTriple& a, const StochasticTriple& b) { return a = a - b; }
inline StochasticTriple& operator*=(StochasticTriple& a, const StochasticTriple& b) { return a = a * b; }
inline StochasticTriple& operator/=(StochasticTriple& a, const StochasticTriple& b) { return a = a / b; }

StochasticTriple exp(const StochasticTriple& x);
StochasticTriple log(const StochasticTriple& x);
StochasticTriple sqrt(const StochasticTriple& x);
StochasticTriple pow(const StochasticTriple& x, double exponent);
StochasticTriple pow(const StochasticTriple& x, const StochasticTriple& exponent);
StochasticTriple square(const StochasticTriple& x);
StochasticTriple cube(const StochasticTriple& x);

inline double square(double x) { return x * x; }
inline double cube(double x) { return x * x * x; }

// Comparisons are only defined when neither side carries derivative
// information; branching on a random triple is not supported.
bool operator<(const StochasticTriple& a, const StochasticTriple& b);
bool operator>(const StochasticTriple& a, const StochasticTriple& b);
bool operator<=(const StochasticTriple& a, const StochasticTriple& b);
bool operator>=(const StochasticTriple& a, const StochasticTriple& b);
bool operator==(const StochasticTriple& a, const StochasticTriple& b);

/// values[idx] with 0-based integer index. A perturbed index yields the
/// difference to the element at the alternate index (plus that element's
/// own change if it is coupled to the index).
StochasticTriple index_array(std::span<const StochasticTriple> values, const StochasticTriple& idx);
StochasticTriple index_array(std::span<const double> values, const StochasticTriple& idx);
double index_array(std::span<const double> values, double idx);

}  // namespace stochad
