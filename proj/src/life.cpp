#include <string>

#include "stochad/experiments.hpp"

namespace stochad {

void validate(const LifeConfig& cfg) {
  if (cfg.board_size < 3) throw ContractViolation("game of life board must be at least 3x3");
  if (cfg.steps < 0) throw ContractViolation("game of life step count must be nonnegative");
  if (!(cfg.fidelity > 0.0 && cfg.fidelity < 1.0)) throw DomainError("game of life rule fidelity must lie in (0, 1)");
}

std::vector<double> life_transition_table(double fidelity) {
  std::vector<double> table(18, 1.0 - fidelity);
  table[3] = fidelity;      // birth: dead cell with exactly 3 live neighbours
  table[9 + 2] = fidelity;  // survival: live cell with 2 or 3
  table[9 + 3] = fidelity;
  return table;
}

Program life_experiment(const LifeConfig& cfg) {
  Program prog{"life", {}, {}, {}};
  prog.primal = [cfg](double p, Evaluation& ev) { return game_of_life(cfg, p, ev); };
  prog.triple = [cfg](const StochasticTriple& p, Evaluation& ev) { return game_of_life(cfg, p, ev); };
  return prog;
}

}  // namespace stochad
