#include <cmath>

#include "stochad/experiments.hpp"

namespace stochad {

Program toy_experiment() {
  return make_program("toy", [](const auto& p, Evaluation& ev) { return toy_program(p, ev); });
}

Program two_step_walk_experiment() {
  Program prog{"two_step_walk", {}, {}, {}};
  prog.primal = [](double p, Evaluation& ev) { return two_step_walk(p, ev); };
  prog.triple = [](const StochasticTriple& p, Evaluation& ev) { return two_step_walk(p, ev); };
  return prog;
}

Program bernoulli_experiment() {
  return make_program("bernoulli", [](const auto& p, Evaluation& ev) {
    using T = std::decay_t<decltype(p)>;
    return sample(Bernoulli<T>{p}, ev);
  });
}

Program binomial_experiment(std::int64_t n) {
  return make_program("binomial", [n](const auto& p, Evaluation& ev) {
    using T = std::decay_t<decltype(p)>;
    return sample(Binomial<T>{n, p}, ev);
  });
}

Program geometric_experiment() {
  return make_program("geometric", [](const auto& p, Evaluation& ev) {
    using T = std::decay_t<decltype(p)>;
    return sample(Geometric<T>{p}, ev);
  });
}

Program poisson_experiment() {
  return make_program("poisson", [](const auto& rate, Evaluation& ev) {
    using T = std::decay_t<decltype(rate)>;
    return sample(Poisson<T>{rate}, ev);
  });
}

Program geometric_cube_experiment() {
  return make_program("geometric_cube", [](const auto& p, Evaluation& ev) {
    using T = std::decay_t<decltype(p)>;
    return cube(sample(Geometric<T>{p}, ev));
  });
}

namespace {

TracedProgram traced_draw(std::string name, std::function<DiscreteDist(double)> make) {
  return {std::move(name), [make](double p, Evaluation& ev) {
            const DiscreteDist dist = make(p);
            const auto x = inversion_quantile(dist, ev.stream().uniform());
            return Traced{static_cast<double>(x), score(dist, x)};
          }};
}

}  // namespace

TracedProgram bernoulli_traced() {
  return traced_draw("bernoulli", [](double p) { return Bernoulli<double>{p}; });
}

TracedProgram binomial_traced(std::int64_t n) {
  return traced_draw("binomial", [n](double p) { return Binomial<double>{n, p}; });
}

TracedProgram geometric_traced() {
  return traced_draw("geometric", [](double p) { return Geometric<double>{p}; });
}

TracedProgram poisson_traced() {
  return traced_draw("poisson", [](double rate) { return Poisson<double>{rate}; });
}

}  // namespace stochad
