#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "stochad/evaluation.hpp"
#include "stochad/smoothing.hpp"
#include "stochad/triple.hpp"

namespace stochad {

// Distribution families, parameterized by a scalar type: double for plain
// sampling, StochasticTriple for unbiased derivative tracking, SmoothedDual
// for smoothed derivatives.
template <class T>
struct Bernoulli {
  T p;
};

template <class T>
struct Binomial {
  std::int64_t n;
  T p;
};

// Number of failures before the first success; support {0, 1, 2, ...}.
template <class T>
struct Geometric {
  T p;
};

template <class T>
struct Poisson {
  T rate;
};

template <class T>
struct Exponential {
  T scale;
};

template <class T>
struct Normal {
  T mean;
  T stddev;
};

template <class T>
struct Uniform {
  T low;
  T high;
};

using DiscreteDist = std::variant<Bernoulli<double>, Binomial<double>, Geometric<double>, Poisson<double>>;

/// Jump weights of an integer-valued draw conditional on its outcome:
/// `down` is the rate of moving to x - 1, `up` the rate of moving to x + 1,
/// both as nonnegative magnitudes for the given direction of perturbation.
struct DistWeights {
  double down = 0.0;
  double up = 0.0;

  friend bool operator==(const DistWeights&, const DistWeights&) = default;
};

DistWeights discrete_weights(const DiscreteDist& dist, std::int64_t x, DerivativeMode direction);

// Generalized inverse CDF: smallest x with P(X <= x) > u. Boundary
// probabilities (p = 0 or 1) are accepted here since they are valid to sample.
std::int64_t inversion_quantile(const DiscreteDist& dist, double u);

double pmf(const DiscreteDist& dist, std::int64_t x);
double cdf(const DiscreteDist& dist, std::int64_t x);

// d/dθ log P(X = x) for the distribution's parameter θ.
double score(const DiscreteDist& dist, std::int64_t x);

// Smallest x with P(X <= x) >= 1 - tail; used for exhaustive enumeration.
std::int64_t support_bound(const DiscreteDist& dist, double tail);

// Inversion over `outcomes` in the given order with cumulative `probs`.
std::size_t categorical_quantile(std::span<const double> probs, double u);

// --- sampling -------------------------------------------------------------

double sample(const Bernoulli<double>& d, Evaluation& ev);
double sample(const Binomial<double>& d, Evaluation& ev);
double sample(const Geometric<double>& d, Evaluation& ev);
double sample(const Poisson<double>& d, Evaluation& ev);

/// Discrete draws with triple parameters. The primal outcome uses one
/// uniform from the evaluation's stream. A nonzero dual part of the parameter
/// creates a fresh-tag jump of weight |δ|·(down + up); a perturbation on the
/// parameter yields the coupled alternate outcome at the same uniform. The
/// two are merged by pruning.
StochasticTriple sample(const Bernoulli<StochasticTriple>& d, Evaluation& ev);
StochasticTriple sample(const Binomial<StochasticTriple>& d, Evaluation& ev);
StochasticTriple sample(const Geometric<StochasticTriple>& d, Evaluation& ev);
StochasticTriple sample(const Poisson<StochasticTriple>& d, Evaluation& ev);

// Smoothed rules. Bernoulli follows ev.bernoulli_flavor(); the other
// families use the evaluation's derivative mode.
SmoothedDual sample(const Bernoulli<SmoothedDual>& d, Evaluation& ev);
SmoothedDual sample(const Binomial<SmoothedDual>& d, Evaluation& ev);
SmoothedDual sample(const Geometric<SmoothedDual>& d, Evaluation& ev);
SmoothedDual sample(const Poisson<SmoothedDual>& d, Evaluation& ev);

/// Categorical draw over `outcomes` with probabilities `probs` (summing to
/// one within 1e-9). Jumps go to the neighbouring outcomes in list order.
double sample_categorical(std::span<const double> probs, std::span<const double> outcomes, Evaluation& ev);
StochasticTriple sample_categorical(std::span<const StochasticTriple> probs, std::span<const double> outcomes,
                                    Evaluation& ev);
SmoothedDual sample_categorical(std::span<const SmoothedDual> probs, std::span<const double> outcomes,
                                Evaluation& ev);

namespace detail {
void check_positive(double v, const char* what, const char* path);
void check_scale(const double& v, const char* what);
void check_scale(const StochasticTriple& v, const char* what);
void check_scale(const SmoothedDual& v, const char* what);
}  // namespace detail

// Continuous draws are reparameterized (location-scale at a fixed standard
// draw), so the same expression serves all scalar types; perturbations of
// the parameters produce coupled alternates and no new jumps.
template <class T>
T sample(const Exponential<T>& d, Evaluation& ev) {
  detail::check_scale(d.scale, "exponential scale");
  const double standard = -std::log1p(-ev.stream().uniform());
  return d.scale * T(standard);
}

template <class T>
T sample(const Normal<T>& d, Evaluation& ev) {
  detail::check_scale(d.stddev, "normal stddev");
  const double z = ev.stream().standard_normal();
  return d.mean + d.stddev * T(z);
}

template <class T>
T sample(const Uniform<T>& d, Evaluation& ev) {
  const double u = ev.stream().uniform();
  return d.low + (d.high - d.low) * T(u);
}

}  // namespace stochad
