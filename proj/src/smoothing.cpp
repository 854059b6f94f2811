#include "stochad/smoothing.hpp"

#include <string>

#include "stochad/errors.hpp"

namespace stochad {

std::ostream& operator<<(std::ostream& os, const SmoothedDual& x) {
  return os << x.value << " + " << x.sderiv << "ε";
}

SmoothedDual smooth_collapse(const StochasticTriple& st, DerivativeMode mode) {
  return {st.value, derivative_contribution(st, mode)};
}

SmoothedDual smooth_bernoulli(const SmoothedDual& p, std::int64_t x, SmoothingFlavor flavor) {
  if (!(p.value > 0.0 && p.value < 1.0)) {
    throw DomainError("smooth_bernoulli: p must lie strictly inside (0, 1), got " + std::to_string(p.value));
  }
  if (x != 0 && x != 1) throw ContractViolation("smooth_bernoulli: outcome must be 0 or 1");
  const double outcome = static_cast<double>(x);
  switch (flavor) {
    case SmoothingFlavor::right:
      return {outcome, x == 0 ? p.sderiv / (1.0 - p.value) : 0.0};
    case SmoothingFlavor::left:
      return {outcome, x == 1 ? p.sderiv / p.value : 0.0};
    case SmoothingFlavor::straight_through:
      return {outcome, p.sderiv};
  }
  return {outcome, 0.0};
}

SmoothedDual new_weight(const SmoothedDual& p) {
  if (!(p.value > 0.0)) throw DomainError("new_weight: probability must be positive, got " + std::to_string(p.value));
  return {1.0, p.sderiv / p.value};
}

}  // namespace stochad
