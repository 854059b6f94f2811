#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stochad/evaluation.hpp"
#include "stochad/smoothing.hpp"
#include "stochad/triple.hpp"

namespace stochad {

/// A stochastic program X(p) evaluable on plain reals, on stochastic
/// triples and (optionally) on smoothed duals. All variants must consume
/// the evaluation's primal stream in the same order.
struct Program {
  std::string name;
  std::function<double(double, Evaluation&)> primal;
  std::function<StochasticTriple(const StochasticTriple&, Evaluation&)> triple;
  std::function<SmoothedDual(const SmoothedDual&, Evaluation&)> smoothed;
};

// Wraps a generic callable `f(T p, Evaluation&) -> T`.
template <class F>
Program make_program(std::string name, F f) {
  Program prog{std::move(name), {}, {}, {}};
  prog.primal = [f](double p, Evaluation& ev) -> double { return f(p, ev); };
  prog.triple = [f](const StochasticTriple& p, Evaluation& ev) -> StochasticTriple { return f(p, ev); };
  if constexpr (std::invocable<F&, SmoothedDual, Evaluation&>) {
    prog.smoothed = [f](const SmoothedDual& p, Evaluation& ev) -> SmoothedDual { return f(p, ev); };
  }
  return prog;
}

/// Output of a program together with the accumulated score
/// sum_i d/dp log P(choice_i) over the discrete choices it made.
struct Traced {
  double output = 0.0;
  double score = 0.0;
};

struct TracedProgram {
  std::string name;
  std::function<Traced(double, Evaluation&)> evaluate;
};

struct EstimateSummary {
  std::string estimator;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::uint64_t samples = 10000;
  unsigned threads = 1;
  DerivativeMode mode = DerivativeMode::right;
};

enum class Coupling { common, independent };
enum class ControlVariate { none, batch_mean };

// Sample mean, unbiased sample variance and sqrt(variance / n) of `values`
// in index order, so results do not depend on how they were produced.
EstimateSummary summarize(std::span<const double> values, std::string estimator, std::uint64_t seed,
                          double seconds = 0.0);

// Evaluates replicate(r) for r in [0, n) on up to `threads` workers and
// returns the results indexed by r.
std::vector<double> run_replicates(std::uint64_t n, unsigned threads,
                                   const std::function<double(std::uint64_t)>& replicate);

// One unbiased sample of d/dp E[X(p)] using the evaluation's streams.
double derivative_estimate(const Program& prog, double p, Evaluation& ev);

// One sample of the smoothed derivative (requires prog.smoothed).
double smoothed_estimate(const Program& prog, double p, Evaluation& ev);

// Replicate r runs in Evaluation(seed, r, mode).
EstimateSummary estimate_mean(const Program& prog, double p, const RunOptions& opts);
EstimateSummary estimate_smoothed_mean(const Program& prog, double p, const RunOptions& opts,
                                       SmoothingFlavor bernoulli_flavor = SmoothingFlavor::straight_through);

// Mean of the primal output, E[X(p)].
EstimateSummary estimate_value(const Program& prog, double p, const RunOptions& opts);

/// Central difference (X(p + step) - X(p - step)) / (2 step) per replicate.
/// `common` evaluates both sides on the same stream, `independent` on two.
EstimateSummary finite_difference(const Program& prog, double p, double step, const RunOptions& opts,
                                  Coupling coupling);

/// Score-function estimator f(x) * score. With batch_mean the baseline is
/// the mean output of a separate pilot batch of round(pilot_fraction * n)
/// runs (at least 2), which is excluded from the reported estimate.
EstimateSummary score_function(const TracedProgram& prog, double p, const RunOptions& opts, ControlVariate cv,
                               double pilot_fraction = 0.1);

}  // namespace stochad
