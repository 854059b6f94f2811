#include "stochad/triple.hpp"

#include <cmath>
#include <sstream>

namespace stochad {

bool StochasticTriple::is_deterministic() const { return delta == 0.0 && !resolve_active(pert).has_value(); }

std::ostream& operator<<(std::ostream& os, const StochasticTriple& st) {
  os << st.value;
  if (st.delta != 0.0) os << " + " << st.delta << "ε";
  if (auto p = resolve_active(st.pert)) os << " + (" << p->delta << " with probability " << p->weight << "ε)";
  return os;
}

StochasticTriple make_input(double p) {
  if (!std::isfinite(p)) throw ContractViolation("make_input: input must be finite");
  return {p, 1.0};
}

double derivative_contribution(const StochasticTriple& st, DerivativeMode mode) {
  const auto p = resolve_active(st.pert);
  if (!p) return st.delta;
  return st.delta + mode_sign(mode) * p->weight * p->delta;
}

StochasticTriple operator+(const StochasticTriple& a, const StochasticTriple& b) {
  return lift_binary([](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
                     [](double, double) { return 1.0; }, a, b, "add");
}

StochasticTriple operator-(const StochasticTriple& a, const StochasticTriple& b) {
  return lift_binary([](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
                     [](double, double) { return -1.0; }, a, b, "subtract");
}

StochasticTriple operator*(const StochasticTriple& a, const StochasticTriple& b) {
  return lift_binary([](double x, double y) { return x * y; }, [](double, double y) { return y; },
                     [](double x, double) { return x; }, a, b, "multiply");
}

StochasticTriple operator/(const StochasticTriple& a, const StochasticTriple& b) {
  if (b.value == 0.0) throw EvaluationError("divide: zero denominator at the primal point");
  auto div = [](double x, double y) {
    if (y == 0.0) throw EvaluationError("divide: zero denominator at the alternate point");
    return x / y;
  };
  return lift_binary(div, [](double, double y) { return 1.0 / y; },
                     [](double x, double y) { return -x / (y * y); }, a, b, "divide");
}

StochasticTriple operator-(const StochasticTriple& a) {
  return lift_smooth([](double x) { return -x; }, [](double) { return -1.0; }, a, "negate");
}

StochasticTriple exp(const StochasticTriple& x) {
  return lift_smooth([](double v) { return std::exp(v); }, [](double v) { return std::exp(v); }, x, "exp");
}

StochasticTriple log(const StochasticTriple& x) {
  return lift_smooth([](double v) { return std::log(v); }, [](double v) { return 1.0 / v; }, x, "log");
}

StochasticTriple sqrt(const StochasticTriple& x) {
  return lift_smooth([](double v) { return std::sqrt(v); }, [](double v) { return 0.5 / std::sqrt(v); }, x, "sqrt");
}

StochasticTriple pow(const StochasticTriple& x, double exponent) {
  return lift_smooth([exponent](double v) { return std::pow(v, exponent); },
                     [exponent](double v) { return exponent * std::pow(v, exponent - 1.0); }, x, "pow");
}

StochasticTriple pow(const StochasticTriple& x, const StochasticTriple& exponent) {
  return lift_binary([](double v, double e) { return std::pow(v, e); },
                     [](double v, double e) { return e * std::pow(v, e - 1.0); },
                     [](double v, double e) { return std::pow(v, e) * std::log(v); }, x, exponent, "pow");
}

StochasticTriple square(const StochasticTriple& x) {
  return lift_smooth([](double v) { return v * v; }, [](double v) { return 2.0 * v; }, x, "square");
}

StochasticTriple cube(const StochasticTriple& x) {
  return lift_smooth([](double v) { return v * v * v; }, [](double v) { return 3.0 * v * v; }, x, "cube");
}

namespace {

void require_comparable(const StochasticTriple& a, const StochasticTriple& b) {
  if (!a.is_deterministic() || !b.is_deterministic()) {
    throw UnsupportedOperation(
        "comparison of stochastic triples carrying derivative information is not supported; "
        "rewrite the branch with index_array or compare primal_value() explicitly");
  }
}

}  // namespace

bool operator<(const StochasticTriple& a, const StochasticTriple& b) {
  require_comparable(a, b);
  return a.value < b.value;
}
bool operator>(const StochasticTriple& a, const StochasticTriple& b) { return b < a; }
bool operator<=(const StochasticTriple& a, const StochasticTriple& b) {
  require_comparable(a, b);
  return a.value <= b.value;
}
bool operator>=(const StochasticTriple& a, const StochasticTriple& b) { return b <= a; }
bool operator==(const StochasticTriple& a, const StochasticTriple& b) {
  require_comparable(a, b);
  return a.value == b.value;
}

namespace {

std::size_t checked_index(double idx, std::size_t size, const char* path) {
  if (!std::isfinite(idx) || idx != std::floor(idx)) {
    std::ostringstream msg;
    msg << "index_array: " << path << " index " << idx << " is not an integer";
    throw IndexError(msg.str());
  }
  if (idx < 0.0 || idx >= static_cast<double>(size)) {
    std::ostringstream msg;
    msg << "index_array: " << path << " index " << idx << " out of bounds for size " << size;
    throw IndexError(msg.str());
  }
  return static_cast<std::size_t>(idx);
}

template <class Element>
StochasticTriple index_impl(std::span<const Element> values, const StochasticTriple& idx) {
  if (idx.delta != 0.0) throw ContractViolation("index_array: index must be integer-valued (zero dual part)");
  const std::size_t i = checked_index(idx.value, values.size(), "primal");
  const StochasticTriple here = values[i];
  const auto p_idx = resolve_active(idx.pert);
  const auto p_here = resolve_active(here.pert);
  StochasticTriple out(here.value, here.delta);
  const auto chosen = select_active(p_idx, p_here);
  if (!chosen) return out;
  double alt;
  if (p_idx && p_idx->tag == chosen->tag) {
    const std::size_t j = checked_index(idx.value + p_idx->delta, values.size(), "alternate");
    const StochasticTriple there = values[j];
    alt = there.value;
    const auto p_there = resolve_active(there.pert);
    if (p_there && p_there->tag == chosen->tag) alt += p_there->delta;
  } else {
    alt = here.value + p_here->delta;
  }
  out.pert = Perturbation{alt - here.value, chosen->weight, chosen->tag};
  return out;
}

}  // namespace

StochasticTriple index_array(std::span<const StochasticTriple> values, const StochasticTriple& idx) {
  return index_impl(values, idx);
}

StochasticTriple index_array(std::span<const double> values, const StochasticTriple& idx) {
  return index_impl(values, idx);
}

double index_array(std::span<const double> values, double idx) {
  return values[checked_index(idx, values.size(), "primal")];
}

}  // namespace stochad
