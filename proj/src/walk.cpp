#include <cmath>
#include <string>

#include "stochad/experiments.hpp"

namespace stochad {

void validate(const WalkConfig& cfg) {
  if (cfg.n < 1) throw ContractViolation("random walk needs at least one step, got " + std::to_string(cfg.n));
  if (!(cfg.p > 0.0)) throw DomainError("random walk parameter p must be positive");
}

Traced walk_score_trace(const WalkConfig& cfg, double p, Evaluation& ev) {
  validate(cfg);
  if (!(p > 0.0)) throw DomainError("random walk parameter p must be positive");
  double x = 0.0;
  double score_sum = 0.0;
  for (int i = 0; i < cfg.n; ++i) {
    const double q = std::exp(-x / p);
    const double dlogq = x / (p * p);
    const bool up = ev.stream().uniform() >= 1.0 - q;
    if (up) {
      score_sum += dlogq;
      x += 1.0;
    } else {
      if (!(1.0 - q > 0.0)) throw NumericalError("walk_score_trace: down-step with zero probability");
      score_sum -= dlogq * q / (1.0 - q);
      x -= 1.0;
    }
  }
  return {x * x, score_sum};
}

Program walk_experiment(const WalkConfig& cfg) {
  return make_program("walk", [cfg](const auto& p, Evaluation& ev) { return random_walk(cfg, p, ev); });
}

TracedProgram walk_traced(const WalkConfig& cfg) {
  return {"walk", [cfg](double p, Evaluation& ev) { return walk_score_trace(cfg, p, ev); }};
}

}  // namespace stochad
