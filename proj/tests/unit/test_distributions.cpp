#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "stochad/distributions.hpp"
#include "stochad/errors.hpp"
#include "stochad/estimators.hpp"
#include "stochad/evaluation.hpp"
#include "stochad/experiments.hpp"

using namespace stochad;

namespace {

// Independent geometric quantile: smallest x with 1 - (1-p)^(x+1) > u.
std::int64_t geometric_oracle(double p, double u) {
  std::int64_t x = 0;
  while (1.0 - std::pow(1.0 - p, static_cast<double>(x + 1)) <= u) ++x;
  return x;
}

// First uniform the primal stream of Evaluation(seed, r) will produce.
double peek_uniform(Evaluation& ev) {
  RandomStream copy = ev.stream();
  return copy.uniform();
}

double exhaustive(const DiscreteDist& dist, DerivativeMode mode) {
  double sum = 0.0;
  for (std::int64_t x = 0; x <= support_bound(dist, 1e-16); ++x) {
    const DistWeights w = discrete_weights(dist, x, mode);
    sum += pmf(dist, x) * mode_sign(mode) * (w.up - w.down);
  }
  return sum;
}

}  // namespace

TEST_CASE("weight table entries") {
  auto check = [](const DiscreteDist& d, std::int64_t x, DerivativeMode m, double down, double up) {
    const DistWeights w = discrete_weights(d, x, m);
    CHECK(w.down == doctest::Approx(down));
    CHECK(w.up == doctest::Approx(up));
  };
  const auto R = DerivativeMode::right;
  const auto L = DerivativeMode::left;
  check(Bernoulli<double>{0.6}, 0, R, 0, 2.5);
  check(Bernoulli<double>{0.6}, 1, R, 0, 0);
  check(Bernoulli<double>{0.6}, 1, L, 1 / 0.6, 0);
  check(Binomial<double>{10, 0.6}, 6, R, 0, 10.0);
  check(Binomial<double>{10, 0.6}, 10, R, 0, 0);
  check(Binomial<double>{10, 0.6}, 6, L, 10.0, 0);
  check(Poisson<double>{2.0}, 3, R, 0, 1);
  check(Poisson<double>{2.0}, 3, L, 1.5, 0);
  check(Poisson<double>{2.0}, 0, L, 0, 0);
  check(Geometric<double>{0.5}, 2, R, 8, 0);
  check(Geometric<double>{0.5}, 0, R, 0, 0);
  check(Geometric<double>{0.5}, 2, L, 0, 6);
}

TEST_CASE("geometric right weight matches the common-u flip rate") {
  // P(sample at p+h is x-1 | sample at p is x) / h on a fine grid of u within x's bin.
  const double p = 0.5;
  const double h = 1e-4;
  const std::int64_t x = 2;
  const double lo = 1.0 - std::pow(1.0 - p, 2.0);
  const double hi = 1.0 - std::pow(1.0 - p, 3.0);
  const int grid = 2000000;
  int flips = 0;
  int in_bin = 0;
  for (int i = 0; i < grid; ++i) {
    const double u = lo + (hi - lo) * (i + 0.5) / grid;
    if (geometric_oracle(p, u) != x) continue;
    ++in_bin;
    flips += geometric_oracle(p + h, u) == x - 1;
  }
  const double rate = static_cast<double>(flips) / in_bin / h;
  CHECK(rate == doctest::Approx(8.0).epsilon(1e-3));
  CHECK(discrete_weights(Geometric<double>{p}, x, DerivativeMode::right).down == doctest::Approx(rate).epsilon(1e-3));
}

TEST_CASE("weight table errors") {
  CHECK_THROWS_AS(discrete_weights(Bernoulli<double>{1.0}, 1, DerivativeMode::right), DomainError);
  CHECK_THROWS_AS(discrete_weights(Binomial<double>{10, 0.0}, 0, DerivativeMode::right), DomainError);
  CHECK_THROWS_AS(discrete_weights(Poisson<double>{0.0}, 0, DerivativeMode::right), DomainError);
  CHECK_THROWS_AS(discrete_weights(Bernoulli<double>{0.5}, 2, DerivativeMode::right), ContractViolation);
  CHECK_THROWS_AS(discrete_weights(Binomial<double>{10, 0.5}, 11, DerivativeMode::right), ContractViolation);
  CHECK_THROWS_AS(discrete_weights(Geometric<double>{0.5}, -1, DerivativeMode::right), ContractViolation);
}

TEST_CASE("exhaustive weight expectations equal the mean derivative in both directions") {
  struct Case {
    DiscreteDist dist;
    double target;
  };
  const std::vector<Case> cases = {{Bernoulli<double>{0.6}, 1.0},     {Bernoulli<double>{0.05}, 1.0},
                                   {Binomial<double>{10, 0.6}, 10.0}, {Binomial<double>{37, 0.2}, 37.0},
                                   {Geometric<double>{0.5}, -4.0},    {Geometric<double>{0.2}, -25.0},
                                   {Poisson<double>{2.0}, 1.0},       {Poisson<double>{15.5}, 1.0}};
  for (const auto& c : cases) {
    CHECK(std::abs(exhaustive(c.dist, DerivativeMode::right) - c.target) < 1e-10);
    CHECK(std::abs(exhaustive(c.dist, DerivativeMode::left) - c.target) < 1e-10);
  }
}

TEST_CASE("inversion quantiles") {
  CHECK(inversion_quantile(Bernoulli<double>{0.6}, 0.5) == 1);
  CHECK(inversion_quantile(Bernoulli<double>{0.6}, 0.3) == 0);
  CHECK(inversion_quantile(Geometric<double>{0.5}, 0.8) == 2);
  CHECK(inversion_quantile(Binomial<double>{10, 0.6}, 0.0) == 0);
  CHECK(inversion_quantile(Poisson<double>{2.0}, 0.0) == 0);
  CHECK_THROWS_AS(inversion_quantile(Bernoulli<double>{1.5}, 0.5), DomainError);
  CHECK_THROWS_AS(inversion_quantile(Poisson<double>{-1.0}, 0.5), DomainError);
  CHECK_THROWS_AS(inversion_quantile(Bernoulli<double>{0.5}, 1.0), ContractViolation);
}

TEST_CASE("inversion agrees with the cdf and is nondecreasing in u") {
  const std::vector<DiscreteDist> dists = {Bernoulli<double>{0.3}, Binomial<double>{12, 0.35},
                                           Geometric<double>{0.3}, Poisson<double>{3.7}};
  for (const auto& d : dists) {
    std::int64_t prev = 0;
    for (int i = 0; i < 2000; ++i) {
      const double u = (i + 0.5) / 2000.0;
      const std::int64_t x = inversion_quantile(d, u);
      CHECK(x >= prev);
      prev = x;
      CHECK(cdf(d, x) > u);
      CHECK(cdf(d, x - 1) <= u + 1e-15);
    }
  }
}

TEST_CASE("large-parameter quantiles do not underflow") {
  RandomStream rng(3, 3);
  double sum_b = 0.0;
  double sum_p = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    sum_b += static_cast<double>(inversion_quantile(Binomial<double>{1000, 0.6}, rng.uniform()));
    sum_p += static_cast<double>(inversion_quantile(Poisson<double>{1000.0}, rng.uniform()));
  }
  CHECK(sum_b / n == doctest::Approx(600.0).epsilon(0.005));
  CHECK(sum_p / n == doctest::Approx(1000.0).epsilon(0.005));
}

TEST_CASE("common-u coupling moves samples by at most one step in the cdf's direction") {
  struct Case {
    std::function<DiscreteDist(double)> make;
    double param;
    int direction;
  };
  const std::vector<Case> cases = {
      {[](double p) { return Bernoulli<double>{p}; }, 0.4, +1},
      {[](double p) { return Binomial<double>{20, p}; }, 0.4, +1},
      {[](double p) { return Geometric<double>{p}; }, 0.4, -1},
      {[](double r) { return Poisson<double>{r}; }, 4.0, +1},
  };
  for (const auto& c : cases) {
    for (int i = 0; i < 5000; ++i) {
      const double u = (i + 0.5) / 5000.0;
      const auto x = inversion_quantile(c.make(c.param), u);
      const auto y = inversion_quantile(c.make(c.param + 1e-7), u);
      CHECK((y - x) * c.direction >= 0);
      CHECK(std::abs(y - x) <= 1);
    }
  }
}

TEST_CASE("sampling a discrete distribution with a triple parameter") {
  SUBCASE("binomial jump up with weight 10 at x = 6") {
    bool found = false;
    for (std::uint64_t r = 0; r < 200 && !found; ++r) {
      Evaluation ev(1, r);
      if (inversion_quantile(Binomial<double>{10, 0.6}, peek_uniform(ev)) != 6) continue;
      found = true;
      const auto x = sample(Binomial<StochasticTriple>{10, make_input(0.6)}, ev);
      CHECK(x.value == 6);
      CHECK(x.delta == 0);
      REQUIRE(x.pert.has_value());
      CHECK(x.pert->delta == 1);
      CHECK(x.pert->weight == doctest::Approx(10.0));
    }
    CHECK(found);
  }
  SUBCASE("bernoulli with outcome 1 has no right jump") {
    for (std::uint64_t r = 0; r < 50; ++r) {
      Evaluation ev(2, r);
      const bool one = peek_uniform(ev) >= 0.4;
      const auto x = sample(Bernoulli<StochasticTriple>{make_input(0.6)}, ev);
      CHECK(x.value == (one ? 1 : 0));
      if (one) {
        CHECK_FALSE(x.pert.has_value());
      } else {
        REQUIRE(x.pert.has_value());
        CHECK(x.pert->weight == doctest::Approx(2.5));
      }
    }
  }
  SUBCASE("left mode jumps down from outcome 1") {
    for (std::uint64_t r = 0; r < 50; ++r) {
      Evaluation ev(2, r, DerivativeMode::left);
      const bool one = peek_uniform(ev) >= 0.4;
      const auto x = sample(Bernoulli<StochasticTriple>{make_input(0.6)}, ev);
      if (one) {
        REQUIRE(x.pert.has_value());
        CHECK(x.pert->delta == -1);
        CHECK(x.pert->weight == doctest::Approx(1 / 0.6));
      } else {
        CHECK_FALSE(x.pert.has_value());
      }
    }
  }
  SUBCASE("coupled alternate with no change keeps the upstream tag") {
    bool found = false;
    for (std::uint64_t r = 0; r < 200 && !found; ++r) {
      Evaluation ev(3, r);
      const double u = peek_uniform(ev);
      if (!(u >= 0.6 && u < 0.65)) continue;
      found = true;
      const Tag t = ev.fresh_tag(2.0);
      const StochasticTriple p{0.6, 0.0, Perturbation{0.4, 2.0, t}};
      const auto x = sample(Bernoulli<StochasticTriple>{p}, ev);
      CHECK(x.value == 1);
      REQUIRE(x.pert.has_value());
      CHECK(x.pert->delta == 0);
      CHECK(x.pert->weight == 2.0);
      CHECK(x.pert->tag == t);
    }
    CHECK(found);
  }
  SUBCASE("coupled alternate reuses the primal uniform") {
    for (std::uint64_t r = 0; r < 100; ++r) {
      Evaluation ev(4, r);
      const double u = peek_uniform(ev);
      const Tag t = ev.fresh_tag(1.0);
      const StochasticTriple p{3.0, 0.0, Perturbation{2.5, 1.0, t}};
      const auto x = sample(Poisson<StochasticTriple>{p}, ev);
      CHECK(x.value == inversion_quantile(Poisson<double>{3.0}, u));
      REQUIRE(x.pert.has_value());
      CHECK(x.value + x.pert->delta == inversion_quantile(Poisson<double>{5.5}, u));
    }
  }
  SUBCASE("invalid alternate parameter is reported as such") {
    Evaluation ev(5, 0);
    const StochasticTriple p{0.6, 0.0, Perturbation{0.6, 1.0, ev.fresh_tag(1.0)}};
    CHECK_THROWS_WITH_AS(sample(Bernoulli<StochasticTriple>{p}, ev), doctest::Contains("alternate"), DomainError);
  }
  SUBCASE("primal stream consumption matches plain sampling") {
    Evaluation a(6, 0);
    Evaluation b(6, 0);
    for (int i = 0; i < 20; ++i) {
      const double plain = sample(Geometric<double>{0.3}, a);
      const auto traced = sample(Geometric<StochasticTriple>{make_input(0.3)}, b);
      CHECK(traced.value == plain);
    }
    CHECK(a.stream().position() == b.stream().position());
  }
}

TEST_CASE("categorical sampling") {
  SUBCASE("two outcomes with opposite sensitivities") {
    for (std::uint64_t r = 0; r < 100; ++r) {
      Evaluation ev(7, r);
      const bool first = peek_uniform(ev) < 0.5;
      const std::vector<StochasticTriple> probs{{0.5, -1.0}, {0.5, 1.0}};
      const std::vector<double> outcomes{0, 1};
      const auto x = sample_categorical(std::span<const StochasticTriple>(probs), outcomes, ev);
      if (first) {
        CHECK(x.value == 0);
        REQUIRE(x.pert.has_value());
        CHECK(x.pert->delta == 1);
        CHECK(x.pert->weight == doctest::Approx(2.0));
      } else {
        CHECK(x.value == 1);
        CHECK_FALSE(x.pert.has_value());
      }
    }
  }
  SUBCASE("zero sensitivities give no perturbation") {
    Evaluation ev(8, 0);
    const std::vector<StochasticTriple> probs{{0.3, 0.0}, {0.7, 0.0}};
    const std::vector<double> outcomes{-1, 5};
    const auto x = sample_categorical(std::span<const StochasticTriple>(probs), outcomes, ev);
    CHECK_FALSE(x.pert.has_value());
  }
  SUBCASE("a two-way categorical matches a Bernoulli draw") {
    for (DerivativeMode mode : {DerivativeMode::right, DerivativeMode::left}) {
      for (std::uint64_t r = 0; r < 200; ++r) {
        const double p = 0.35;
        Evaluation a(9, r, mode);
        const auto ber = sample(Bernoulli<StochasticTriple>{make_input(p)}, a);
        Evaluation b(9, r, mode);
        const std::vector<StochasticTriple> probs{{1 - p, -1.0}, {p, 1.0}};
        const std::vector<double> outcomes{0, 1};
        const auto cat = sample_categorical(std::span<const StochasticTriple>(probs), outcomes, b);
        CHECK(cat.value == ber.value);
        CHECK(cat.pert.has_value() == ber.pert.has_value());
        if (cat.pert && ber.pert) {
          CHECK(cat.pert->delta == ber.pert->delta);
          CHECK(cat.pert->weight == doctest::Approx(ber.pert->weight));
        }
      }
    }
  }
  SUBCASE("unnormalized probabilities are rejected") {
    Evaluation ev(8, 1);
    const std::vector<double> probs{0.3, 0.6};
    const std::vector<double> outcomes{0, 1};
    CHECK_THROWS_AS(sample_categorical(std::span<const double>(probs), outcomes, ev), ContractViolation);
  }
  SUBCASE("three-way categorical is unbiased") {
    // probs (0.5 - p/2, 0.5 - p/2, p) over outcomes (0, 1, 4); d/dp E = -0.5 + 4 = 3.5.
    const auto prog = make_program("categorical", [](const auto& p, Evaluation& ev) {
      using T = std::decay_t<decltype(p)>;
      const std::vector<T> probs{T(0.5) - p * 0.5, T(0.5) - p * 0.5, p};
      const std::vector<double> outcomes{0, 1, 4};
      return sample_categorical(std::span<const T>(probs), outcomes, ev);
    });
    RunOptions opts;
    opts.seed = 10;
    opts.samples = 100000;
    for (DerivativeMode mode : {DerivativeMode::right, DerivativeMode::left}) {
      opts.mode = mode;
      const auto s = estimate_mean(prog, 0.3, opts);
      CHECK(std::abs(s.mean - 3.5) < 3 * s.std_error);
    }
  }
}

TEST_CASE("continuous samplers propagate pathwise derivatives") {
  SUBCASE("exponential scale") {
    Evaluation ev(11, 0);
    const auto x = sample(Exponential<StochasticTriple>{make_input(2.0)}, ev);
    CHECK(x.delta == doctest::Approx(x.value / 2.0));
    Evaluation ev2(11, 0);
    const auto y = sample(Exponential<StochasticTriple>{StochasticTriple(1.0)}, ev2);
    CHECK(y.delta == 0);
  }
  SUBCASE("normal location shift is carried as a coupled alternate") {
    Evaluation ev(12, 0);
    const Tag t = ev.fresh_tag(3.0);
    const StochasticTriple mean{6.0, 0.0, Perturbation{1.0, 3.0, t}};
    const auto x = sample(Normal<StochasticTriple>{mean, StochasticTriple(0.36)}, ev);
    REQUIRE(x.pert.has_value());
    CHECK(x.pert->delta == doctest::Approx(1.0));
    CHECK(x.pert->weight == 3.0);
    CHECK(x.pert->tag == t);
    CHECK(ev.tags_issued() == 1);
  }
  SUBCASE("nonpositive scale on either path is rejected") {
    Evaluation ev(13, 0);
    CHECK_THROWS_AS(sample(Normal<StochasticTriple>{StochasticTriple(0.0), StochasticTriple(-1.0)}, ev), DomainError);
    const StochasticTriple scale{0.5, 0.0, Perturbation{-1.0, 1.0, ev.fresh_tag(1.0)}};
    CHECK_THROWS_WITH_AS(sample(Exponential<StochasticTriple>{scale}, ev), doctest::Contains("alternate"),
                         DomainError);
  }
  SUBCASE("uniform endpoints") {
    Evaluation ev(14, 0);
    const auto x = sample(Uniform<StochasticTriple>{StochasticTriple(0.0), make_input(3.0)}, ev);
    CHECK(x.delta == doctest::Approx(x.value / 3.0));
  }
}

TEST_CASE("single-draw estimators are unbiased in both directions") {
  struct Case {
    Program prog;
    double p;
    double target;
  };
  const std::vector<Case> cases = {{bernoulli_experiment(), 0.6, 1.0},
                                   {binomial_experiment(10), 0.6, 10.0},
                                   {geometric_experiment(), 0.5, -4.0},
                                   {poisson_experiment(), 2.0, 1.0}};
  for (const auto& c : cases) {
    for (DerivativeMode mode : {DerivativeMode::right, DerivativeMode::left}) {
      RunOptions opts;
      opts.seed = 15;
      opts.samples = 100000;
      opts.mode = mode;
      const auto s = estimate_mean(c.prog, c.p, opts);
      INFO(c.prog.name);
      CHECK(std::abs(s.mean - c.target) <= 3 * s.std_error + 1e-12);
    }
  }
}
