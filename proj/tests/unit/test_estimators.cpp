#include <cmath>
#include <vector>

#include "doctest.h"
#include "stochad/errors.hpp"
#include "stochad/estimators.hpp"
#include "stochad/experiments.hpp"

using namespace stochad;

TEST_CASE("summarize") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(v, "x", 5, 0.25);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(s.n == 4);
  CHECK(s.seed == 5);
  CHECK(s.estimator == "x");
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(summarize(one, "x", 0), ContractViolation);
}

TEST_CASE("run_replicates returns results by index and propagates failures") {
  const auto out = run_replicates(100, 7, [](std::uint64_t r) { return static_cast<double>(r * r); });
  for (std::uint64_t r = 0; r < 100; ++r) CHECK(out[r] == static_cast<double>(r * r));
  CHECK_THROWS_AS(run_replicates(10, 4,
                                 [](std::uint64_t r) -> double {
                                   if (r == 6) throw EvaluationError("boom");
                                   return 0.0;
                                 }),
                  EvaluationError);
}

TEST_CASE("identity program has derivative exactly one") {
  const auto prog = make_program("identity", [](const auto& p, Evaluation&) { return p; });
  RunOptions opts;
  opts.samples = 10;
  const auto s = estimate_mean(prog, 0.3, opts);
  CHECK(s.mean == 1.0);
  CHECK(s.variance == 0.0);
  CHECK_THROWS_AS(estimate_mean(prog, 0.3, RunOptions{0, 1, 1, DerivativeMode::right}), ContractViolation);
}

TEST_CASE("Bernoulli triple estimates take values in {0, 2.5}") {
  const Program prog = bernoulli_experiment();
  for (std::uint64_t r = 0; r < 200; ++r) {
    Evaluation ev(31, r);
    const double d = derivative_estimate(prog, 0.6, ev);
    CHECK((d == 0.0 || d == doctest::Approx(2.5)));
  }
}

TEST_CASE("finite differences") {
  const auto square_prog = make_program("square", [](const auto& p, Evaluation&) { return p * p; });
  RunOptions opts;
  opts.samples = 4;
  const auto fd = finite_difference(square_prog, 3.0, 0.01, opts, Coupling::common);
  CHECK(fd.mean == doctest::Approx(6.0));
  CHECK(fd.estimator == "fd_common");
  CHECK_THROWS_AS(finite_difference(square_prog, 3.0, 0.0, opts, Coupling::common), ContractViolation);

  // Independent streams make the difference quotient far noisier than the triple estimate.
  RunOptions big;
  big.seed = 32;
  big.samples = 20000;
  const Program bin = binomial_experiment(10);
  const auto indep = finite_difference(bin, 0.6, 0.01, big, Coupling::independent);
  const auto triple = estimate_mean(bin, 0.6, big);
  CHECK(indep.variance > 100.0 * triple.variance);
  CHECK(std::abs(indep.mean - 10.0) < 4 * indep.std_error);
}

TEST_CASE("score function estimator") {
  RunOptions opts;
  opts.seed = 33;
  opts.samples = 200000;
  const auto ber = score_function(bernoulli_traced(), 0.6, opts, ControlVariate::none);
  CHECK(std::abs(ber.mean - 1.0) < 3 * ber.std_error);
  CHECK(ber.estimator == "score");

  const double n = 100.0;
  const double p = 0.3;
  const auto bin = score_function(binomial_traced(100), p, opts, ControlVariate::none);
  CHECK(std::abs(bin.mean - n) < 3 * bin.std_error);
  const double predicted = n * n * n * p / (1.0 - p);
  CHECK(bin.variance > predicted / 2.0);
  CHECK(bin.variance < predicted * 2.0);

  const auto cv = score_function(binomial_traced(100), p, opts, ControlVariate::batch_mean);
  CHECK(cv.estimator == "score_cv");
  CHECK(std::abs(cv.mean - n) < 3 * cv.std_error);
  CHECK(cv.variance < bin.variance / 10.0);

  const TracedProgram constant{"constant", [](double q, Evaluation& ev) {
                                 const double x = sample(Bernoulli<double>{q}, ev);
                                 return Traced{4.0, score(Bernoulli<double>{q}, static_cast<std::int64_t>(x))};
                               }};
  const auto c = score_function(constant, 0.4, opts, ControlVariate::batch_mean);
  CHECK(c.mean == doctest::Approx(0.0));
  CHECK(c.variance == doctest::Approx(0.0));
}

TEST_CASE("estimates do not depend on the thread count") {
  const Program toy = toy_experiment();
  RunOptions one;
  one.seed = 34;
  one.samples = 3000;
  RunOptions many = one;
  many.threads = 8;
  const auto a = estimate_mean(toy, 0.6, one);
  const auto b = estimate_mean(toy, 0.6, many);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  const auto sa = score_function(walk_traced(WalkConfig{}), 10.0, one, ControlVariate::batch_mean);
  const auto sb = score_function(walk_traced(WalkConfig{}), 10.0, many, ControlVariate::batch_mean);
  CHECK(sa.mean == sb.mean);
}

TEST_CASE("binomial pair derivative is 3n") {
  const auto prog = make_program("pair", [](const auto& p, Evaluation& ev) { return binomial_pair(20, p, ev); });
  RunOptions opts;
  opts.seed = 35;
  opts.samples = 50000;
  for (DerivativeMode mode : {DerivativeMode::right, DerivativeMode::left}) {
    opts.mode = mode;
    const auto s = estimate_mean(prog, 0.35, opts);
    CHECK(std::abs(s.mean - 60.0) < 3 * s.std_error);
  }
  const auto sm = estimate_smoothed_mean(prog, 0.35, opts);
  CHECK(std::abs(sm.mean - 60.0) < 3 * sm.std_error);
}
