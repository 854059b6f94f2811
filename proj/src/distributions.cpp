#include "stochad/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "stochad/errors.hpp"

namespace stochad {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void domain_fail(const std::string& what, double value) {
  std::ostringstream msg;
  msg << what << " out of domain: " << value;
  throw DomainError(msg.str());
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) domain_fail(what, p);
}

void require_interior_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) domain_fail(std::string(what) + " (must be strictly inside (0, 1))", p);
}

void require_support(bool ok, std::int64_t x, const char* dist) {
  if (!ok) {
    throw ContractViolation(std::string(dist) + ": outcome " + std::to_string(x) + " is outside the support");
  }
}

// Sequential inversion for a pmf given by a start point, the pmf there and
// the ratio pmf(k+1)/pmf(k). Mass below `start` is negligible by construction.
template <class Ratio>
std::int64_t accumulate_quantile(std::int64_t start, double pmf_start, std::int64_t last, double u, Ratio ratio) {
  double cumulative = 0.0;
  double mass = pmf_start;
  std::int64_t k = start;
  bool passed_mass = false;
  for (;;) {
    cumulative += mass;
    if (cumulative > u || k >= last) return k;
    if (mass > 0.0) passed_mass = true;
    const double next = mass * ratio(k);
    // Rounding can leave the accumulated CDF a hair below u far in the tail.
    if (passed_mass && next == 0.0) return k;
    mass = next;
    ++k;
  }
}

// Smallest k in [lo, mode] whose log-pmf is at least `floor`; the log-pmf is
// concave, so it increases on this range. Mass skipped below is negligible.
template <class LogPmf>
std::int64_t first_representable(std::int64_t lo, std::int64_t mode, LogPmf log_pmf) {
  constexpr double floor = -700.0;
  if (log_pmf(lo) >= floor) return lo;
  std::int64_t hi = mode;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (log_pmf(mid) >= floor) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::int64_t binomial_quantile(std::int64_t n, double p, double u) {
  if (p == 0.0) return 0;
  if (p == 1.0) return n;
  const double nn = static_cast<double>(n);
  const double mean = nn * p;
  const double sd = std::sqrt(mean * (1.0 - p));
  auto log_pmf = [nn, p](std::int64_t k) {
    const double kf = static_cast<double>(k);
    return std::lgamma(nn + 1.0) - std::lgamma(kf + 1.0) - std::lgamma(nn - kf + 1.0) + kf * std::log(p) +
           (nn - kf) * std::log1p(-p);
  };
  const auto lo = static_cast<std::int64_t>(std::max(0.0, std::floor(mean - 40.0 * sd - 1.0)));
  const auto mode = std::min(n, static_cast<std::int64_t>(std::floor((nn + 1.0) * p)));
  const std::int64_t start = first_representable(lo, std::max(lo, mode), log_pmf);
  const double odds = p / (1.0 - p);
  return accumulate_quantile(start, std::exp(log_pmf(start)), n, u, [n, odds](std::int64_t k) {
    return static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
  });
}

std::int64_t poisson_quantile(double rate, double u) {
  const double sd = std::sqrt(rate);
  auto log_pmf = [rate](std::int64_t k) {
    const double kf = static_cast<double>(k);
    return -rate + kf * std::log(rate) - std::lgamma(kf + 1.0);
  };
  const auto lo = static_cast<std::int64_t>(std::max(0.0, std::floor(rate - 40.0 * sd - 1.0)));
  const auto mode = static_cast<std::int64_t>(std::floor(rate));
  const std::int64_t start = first_representable(lo, std::max(lo, mode), log_pmf);
  return accumulate_quantile(start, std::exp(log_pmf(start)), std::numeric_limits<std::int64_t>::max(), u,
                             [rate](std::int64_t k) { return rate / static_cast<double>(k + 1); });
}

std::int64_t geometric_quantile(double p, double u) {
  if (p == 1.0) return 0;
  const double r = std::log1p(-u) / std::log1p(-p);
  return static_cast<std::int64_t>(std::floor(r));
}

void validate(const DiscreteDist& dist) {
  std::visit(overloaded{
                 [](const Bernoulli<double>& d) { require_probability(d.p, "bernoulli p"); },
                 [](const Binomial<double>& d) {
                   if (d.n < 0) throw DomainError("binomial n must be nonnegative");
                   require_probability(d.p, "binomial p");
                 },
                 [](const Geometric<double>& d) {
                   if (!(d.p > 0.0 && d.p <= 1.0)) domain_fail("geometric p", d.p);
                 },
                 [](const Poisson<double>& d) {
                   if (!(d.rate > 0.0) || !std::isfinite(d.rate)) domain_fail("poisson rate", d.rate);
                 },
             },
             dist);
}

}  // namespace

DistWeights discrete_weights(const DiscreteDist& dist, std::int64_t x, DerivativeMode direction) {
  const bool right = direction == DerivativeMode::right;
  return std::visit(
      overloaded{
          [&](const Bernoulli<double>& d) -> DistWeights {
            require_interior_probability(d.p, "bernoulli p");
            require_support(x == 0 || x == 1, x, "bernoulli");
            if (right) return {0.0, x == 0 ? 1.0 / (1.0 - d.p) : 0.0};
            return {x == 1 ? 1.0 / d.p : 0.0, 0.0};
          },
          [&](const Binomial<double>& d) -> DistWeights {
            require_interior_probability(d.p, "binomial p");
            require_support(x >= 0 && x <= d.n, x, "binomial");
            const auto xf = static_cast<double>(x);
            if (right) return {0.0, x < d.n ? static_cast<double>(d.n - x) / (1.0 - d.p) : 0.0};
            return {x > 0 ? xf / d.p : 0.0, 0.0};
          },
          [&](const Geometric<double>& d) -> DistWeights {
            require_interior_probability(d.p, "geometric p");
            require_support(x >= 0, x, "geometric");
            const auto xf = static_cast<double>(x);
            if (right) return {x > 0 ? xf / (d.p * (1.0 - d.p)) : 0.0, 0.0};
            return {0.0, (xf + 1.0) / d.p};
          },
          [&](const Poisson<double>& d) -> DistWeights {
            if (!(d.rate > 0.0) || !std::isfinite(d.rate)) domain_fail("poisson rate", d.rate);
            require_support(x >= 0, x, "poisson");
            if (right) return {0.0, 1.0};
            return {x > 0 ? static_cast<double>(x) / d.rate : 0.0, 0.0};
          },
      },
      dist);
}

std::int64_t inversion_quantile(const DiscreteDist& dist, double u) {
  validate(dist);
  if (!(u >= 0.0 && u < 1.0)) throw ContractViolation("inversion_quantile: u must lie in [0, 1)");
  return std::visit(overloaded{
                        [u](const Bernoulli<double>& d) -> std::int64_t { return u >= 1.0 - d.p ? 1 : 0; },
                        [u](const Binomial<double>& d) { return binomial_quantile(d.n, d.p, u); },
                        [u](const Geometric<double>& d) { return geometric_quantile(d.p, u); },
                        [u](const Poisson<double>& d) { return poisson_quantile(d.rate, u); },
                    },
                    dist);
}

double pmf(const DiscreteDist& dist, std::int64_t x) {
  validate(dist);
  if (x < 0) return 0.0;
  const auto xf = static_cast<double>(x);
  return std::visit(overloaded{
                        [&](const Bernoulli<double>& d) {
                          return x == 0 ? 1.0 - d.p : (x == 1 ? d.p : 0.0);
                        },
                        [&](const Binomial<double>& d) {
                          if (x > d.n) return 0.0;
                          if (d.p == 0.0) return x == 0 ? 1.0 : 0.0;
                          if (d.p == 1.0) return x == d.n ? 1.0 : 0.0;
                          const auto n = static_cast<double>(d.n);
                          return std::exp(std::lgamma(n + 1.0) - std::lgamma(xf + 1.0) - std::lgamma(n - xf + 1.0) +
                                          xf * std::log(d.p) + (n - xf) * std::log1p(-d.p));
                        },
                        [&](const Geometric<double>& d) {
                          if (d.p == 1.0) return x == 0 ? 1.0 : 0.0;
                          return d.p * std::exp(xf * std::log1p(-d.p));
                        },
                        [&](const Poisson<double>& d) {
                          return std::exp(-d.rate + xf * std::log(d.rate) - std::lgamma(xf + 1.0));
                        },
                    },
                    dist);
}

double cdf(const DiscreteDist& dist, std::int64_t x) {
  if (x < 0) return 0.0;
  if (const auto* g = std::get_if<Geometric<double>>(&dist)) {
    validate(dist);
    return -std::expm1(static_cast<double>(x + 1) * std::log1p(-g->p));
  }
  double total = 0.0;
  for (std::int64_t k = 0; k <= x; ++k) total += pmf(dist, k);
  return std::min(total, 1.0);
}

double score(const DiscreteDist& dist, std::int64_t x) {
  validate(dist);
  const auto xf = static_cast<double>(x);
  return std::visit(overloaded{
                        [&](const Bernoulli<double>& d) { return x == 1 ? 1.0 / d.p : -1.0 / (1.0 - d.p); },
                        [&](const Binomial<double>& d) {
                          return xf / d.p - static_cast<double>(d.n - x) / (1.0 - d.p);
                        },
                        [&](const Geometric<double>& d) { return 1.0 / d.p - xf / (1.0 - d.p); },
                        [&](const Poisson<double>& d) { return xf / d.rate - 1.0; },
                    },
                    dist);
}

std::int64_t support_bound(const DiscreteDist& dist, double tail) {
  validate(dist);
  if (!(tail > 0.0)) throw ContractViolation("support_bound: tail mass must be positive");
  if (std::holds_alternative<Bernoulli<double>>(dist)) return 1;
  if (const auto* b = std::get_if<Binomial<double>>(&dist)) return b->n;
  if (const auto* g = std::get_if<Geometric<double>>(&dist)) {
    // P(X > x) = (1-p)^(x+1)
    if (g->p == 1.0) return 0;
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(std::log(tail) / std::log1p(-g->p))) - 1);
  }
  const double rate = std::get<Poisson<double>>(dist).rate;
  double total = 0.0;
  for (std::int64_t x = 0;; ++x) {
    const double mass = pmf(dist, x);
    total += mass;
    if (total >= 1.0 - tail) return x;
    // Beyond the mode the remaining mass is below mass * r / (1 - r), r = rate / (x + 2).
    const double r = rate / static_cast<double>(x + 2);
    if (r < 1.0 && mass * r / (1.0 - r) <= tail) return x;
  }
}

std::size_t categorical_quantile(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (cumulative > u) return k;
  }
  return probs.empty() ? 0 : probs.size() - 1;
}

// --- double sampling --------------------------------------------------------

double sample(const Bernoulli<double>& d, Evaluation& ev) {
  return static_cast<double>(inversion_quantile(d, ev.stream().uniform()));
}
double sample(const Binomial<double>& d, Evaluation& ev) {
  return static_cast<double>(inversion_quantile(d, ev.stream().uniform()));
}
double sample(const Geometric<double>& d, Evaluation& ev) {
  return static_cast<double>(inversion_quantile(d, ev.stream().uniform()));
}
double sample(const Poisson<double>& d, Evaluation& ev) {
  return static_cast<double>(inversion_quantile(d, ev.stream().uniform()));
}

// --- triple sampling --------------------------------------------------------

namespace {

template <template <class> class D>
struct Family;

template <>
struct Family<Bernoulli> {
  static const StochasticTriple& param(const Bernoulli<StochasticTriple>& d) { return d.p; }
  static const SmoothedDual& param(const Bernoulli<SmoothedDual>& d) { return d.p; }
  template <class T>
  static Bernoulli<double> at(const Bernoulli<T>&, double p) { return {p}; }
};

template <>
struct Family<Binomial> {
  static const StochasticTriple& param(const Binomial<StochasticTriple>& d) { return d.p; }
  static const SmoothedDual& param(const Binomial<SmoothedDual>& d) { return d.p; }
  template <class T>
  static Binomial<double> at(const Binomial<T>& d, double p) { return {d.n, p}; }
};

template <>
struct Family<Geometric> {
  static const StochasticTriple& param(const Geometric<StochasticTriple>& d) { return d.p; }
  static const SmoothedDual& param(const Geometric<SmoothedDual>& d) { return d.p; }
  template <class T>
  static Geometric<double> at(const Geometric<T>&, double p) { return {p}; }
};

template <>
struct Family<Poisson> {
  static const StochasticTriple& param(const Poisson<StochasticTriple>& d) { return d.rate; }
  static const SmoothedDual& param(const Poisson<SmoothedDual>& d) { return d.rate; }
  template <class T>
  static Poisson<double> at(const Poisson<T>&, double rate) { return {rate}; }
};

// Table lookup for a parameter moving with signed speed `speed` under `mode`.
DistWeights directed_weights(const DiscreteDist& dist, std::int64_t x, double speed, DerivativeMode mode) {
  const double s = (speed > 0.0 ? 1.0 : -1.0) * mode_sign(mode);
  const DistWeights w = discrete_weights(dist, x, s > 0.0 ? DerivativeMode::right : DerivativeMode::left);
  const double scale = std::abs(speed);
  return {w.down * scale, w.up * scale};
}

// A fresh-tag jump to x - 1 or x + 1 with the given weights.
std::optional<Perturbation> make_jump(double down, double up, Evaluation& ev) {
  const double total = down + up;
  if (!(total > 0.0)) return std::nullopt;
  double step = up > 0.0 ? 1.0 : -1.0;
  if (down > 0.0 && up > 0.0) step = ev.pruning_stream().uniform() * total < up ? 1.0 : -1.0;
  return Perturbation{step, total, ev.fresh_tag(total)};
}

template <template <class> class D>
StochasticTriple sample_triple(const D<StochasticTriple>& d, Evaluation& ev) {
  using F = Family<D>;
  const StochasticTriple& param = F::param(d);
  const double u = ev.stream().uniform();
  const DiscreteDist primal = F::at(d, param.value);
  const std::int64_t x = inversion_quantile(primal, u);

  std::optional<Perturbation> jump;
  if (param.delta != 0.0) {
    const DistWeights w = directed_weights(primal, x, param.delta, ev.mode());
    jump = make_jump(w.down, w.up, ev);
  }
  std::optional<Perturbation> coupled;
  if (const auto pp = ev.resolve(param.pert)) {
    const DiscreteDist alternate = F::at(d, param.value + pp->delta);
    try {
      validate(alternate);
    } catch (const DomainError& e) {
      throw DomainError(std::string("alternate path: ") + e.what());
    }
    const std::int64_t alt = inversion_quantile(alternate, u);
    coupled = Perturbation{static_cast<double>(alt - x), pp->weight, pp->tag};
  }
  return {static_cast<double>(x), 0.0, ev.select(coupled, jump)};
}

template <template <class> class D>
SmoothedDual sample_smoothed(const D<SmoothedDual>& d, Evaluation& ev) {
  using F = Family<D>;
  const SmoothedDual& param = F::param(d);
  const double u = ev.stream().uniform();
  const DiscreteDist primal = F::at(d, param.value);
  const std::int64_t x = inversion_quantile(primal, u);
  if (param.sderiv == 0.0) return {static_cast<double>(x), 0.0};
  const DistWeights w = directed_weights(primal, x, param.sderiv, ev.mode());
  return {static_cast<double>(x), mode_sign(ev.mode()) * (w.up - w.down)};
}

}  // namespace

StochasticTriple sample(const Bernoulli<StochasticTriple>& d, Evaluation& ev) { return sample_triple(d, ev); }
StochasticTriple sample(const Binomial<StochasticTriple>& d, Evaluation& ev) { return sample_triple(d, ev); }
StochasticTriple sample(const Geometric<StochasticTriple>& d, Evaluation& ev) { return sample_triple(d, ev); }
StochasticTriple sample(const Poisson<StochasticTriple>& d, Evaluation& ev) { return sample_triple(d, ev); }

SmoothedDual sample(const Bernoulli<SmoothedDual>& d, Evaluation& ev) {
  const double u = ev.stream().uniform();
  const std::int64_t x = inversion_quantile(Bernoulli<double>{d.p.value}, u);
  if (d.p.sderiv == 0.0) return {static_cast<double>(x), 0.0};
  return smooth_bernoulli(d.p, x, ev.bernoulli_flavor());
}
SmoothedDual sample(const Binomial<SmoothedDual>& d, Evaluation& ev) { return sample_smoothed(d, ev); }
SmoothedDual sample(const Geometric<SmoothedDual>& d, Evaluation& ev) { return sample_smoothed(d, ev); }
SmoothedDual sample(const Poisson<SmoothedDual>& d, Evaluation& ev) { return sample_smoothed(d, ev); }

// --- categorical ------------------------------------------------------------

namespace {

void check_categorical(std::span<const double> values, std::size_t outcomes) {
  if (values.empty() || values.size() != outcomes) {
    throw ContractViolation("sample_categorical: probabilities and outcomes must be nonempty and of equal length");
  }
  double total = 0.0;
  for (double p : values) {
    if (!(p > 0.0)) throw ContractViolation("sample_categorical: probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractViolation("sample_categorical: probabilities sum to " + std::to_string(total) + ", expected 1");
  }
}

// Jump weights toward outcome k-1 (down) and k+1 (up) given the parameter
// sensitivities of the probabilities.
DistWeights categorical_weights(std::span<const double> probs, std::span<const double> sens, std::size_t k,
                                DerivativeMode mode) {
  const double sign = mode_sign(mode);
  double below = 0.0;  // sum of sensitivities strictly before k
  for (std::size_t i = 0; i < k; ++i) below += sens[i];
  const double through = below + sens[k];
  DistWeights w;
  if (k + 1 < probs.size() && sign * through < 0.0) w.up = std::abs(through) / probs[k];
  if (k > 0 && sign * below > 0.0) w.down = std::abs(below) / probs[k];
  return w;
}

}  // namespace

double sample_categorical(std::span<const double> probs, std::span<const double> outcomes, Evaluation& ev) {
  check_categorical(probs, outcomes.size());
  return outcomes[categorical_quantile(probs, ev.stream().uniform())];
}

StochasticTriple sample_categorical(std::span<const StochasticTriple> probs, std::span<const double> outcomes,
                                    Evaluation& ev) {
  std::vector<double> values(probs.size());
  std::vector<double> sens(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    values[i] = probs[i].value;
    sens[i] = probs[i].delta;
  }
  check_categorical(values, outcomes.size());
  const double u = ev.stream().uniform();
  const std::size_t k = categorical_quantile(values, u);

  std::optional<Perturbation> jump;
  const DistWeights w = categorical_weights(values, sens, k, ev.mode());
  const double total = w.down + w.up;
  if (total > 0.0) {
    bool go_up = w.up > 0.0;
    if (w.down > 0.0 && w.up > 0.0) go_up = ev.pruning_stream().uniform() * total < w.up;
    const std::size_t target = go_up ? k + 1 : k - 1;
    jump = Perturbation{outcomes[target] - outcomes[k], total, ev.fresh_tag(total)};
  }

  std::vector<std::optional<Perturbation>> resolved(probs.size());
  std::optional<Perturbation> chosen;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    resolved[i] = ev.resolve(probs[i].pert);
    chosen = ev.select(chosen, resolved[i]);
  }
  std::optional<Perturbation> coupled;
  if (chosen) {
    std::vector<double> alternate(values);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (resolved[i] && resolved[i]->tag == chosen->tag) alternate[i] += resolved[i]->delta;
    }
    const std::size_t k_alt = categorical_quantile(alternate, u);
    coupled = Perturbation{outcomes[k_alt] - outcomes[k], chosen->weight, chosen->tag};
  }
  return {outcomes[k], 0.0, ev.select(coupled, jump)};
}

SmoothedDual sample_categorical(std::span<const SmoothedDual> probs, std::span<const double> outcomes,
                                Evaluation& ev) {
  std::vector<double> values(probs.size());
  std::vector<double> sens(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    values[i] = probs[i].value;
    sens[i] = probs[i].sderiv;
  }
  check_categorical(values, outcomes.size());
  const std::size_t k = categorical_quantile(values, ev.stream().uniform());
  const DistWeights w = categorical_weights(values, sens, k, ev.mode());
  double expected_change = 0.0;
  if (w.up > 0.0) expected_change += w.up * (outcomes[k + 1] - outcomes[k]);
  if (w.down > 0.0) expected_change += w.down * (outcomes[k - 1] - outcomes[k]);
  return {outcomes[k], mode_sign(ev.mode()) * expected_change};
}

// --- continuous parameter checks ---------------------------------------------

namespace detail {

void check_positive(double v, const char* what, const char* path) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << what << " must be positive on the " << path << " path, got " << v;
    throw DomainError(msg.str());
  }
}

void check_scale(const double& v, const char* what) { check_positive(v, what, "primal"); }

void check_scale(const StochasticTriple& v, const char* what) {
  check_positive(v.value, what, "primal");
  if (const auto p = resolve_active(v.pert)) check_positive(v.value + p->delta, what, "alternate");
}

void check_scale(const SmoothedDual& v, const char* what) { check_positive(v.value, what, "primal"); }

}  // namespace detail

}  // namespace stochad
