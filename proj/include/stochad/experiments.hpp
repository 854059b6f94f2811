#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stochad/distributions.hpp"
#include "stochad/estimators.hpp"
#include "stochad/evaluation.hpp"
#include "stochad/smoothing.hpp"
#include "stochad/triple.hpp"

namespace stochad {

// ---------------------------------------------------------------------------
// Toy program: a = p^2; b ~ Bin(10, p); c = 2b + 3 Ber(p); return a * c * Normal(b, a).
// E[X] = 20 p^3 + 210 p^4.

template <class T>
T toy_program(const T& p, Evaluation& ev) {
  if (!(primal_value(p) > 0.0 && primal_value(p) < 1.0)) throw DomainError("toy_program: p must lie in (0, 1)");
  const T a = p * p;
  const T b = sample(Binomial<T>{10, p}, ev);
  const T c = T(2.0) * b + T(3.0) * sample(Bernoulli<T>{p}, ev);
  return a * c * sample(Normal<T>{b, a}, ev);
}

Program toy_experiment();

// ---------------------------------------------------------------------------
// Two-step walk: X1 ~ Ber(p), X2 ~ Ber(p) if X1 = 0 else Ber(2p); returns X1 + X2.
// E[X] = 2p + p^2 for p <= 1/2.

template <class T>
T two_step_walk(const T& p, Evaluation& ev) {
  const T x1 = sample(Bernoulli<T>{p}, ev);
  const std::vector<T> second{p, T(2.0) * p};
  const T q = index_array(std::span<const T>(second), x1);
  return x1 + sample(Bernoulli<T>{q}, ev);
}

Program two_step_walk_experiment();

// B1 + 2 B2 with B1, B2 ~ Bin(n, p) i.i.d.
template <class T>
T binomial_pair(std::int64_t n, const T& p, Evaluation& ev) {
  const T b1 = sample(Binomial<T>{n, p}, ev);
  const T b2 = sample(Binomial<T>{n, p}, ev);
  return b1 + T(2.0) * b2;
}

// Single draws, used by the distribution checks.
Program bernoulli_experiment();
Program binomial_experiment(std::int64_t n);
Program geometric_experiment();
Program poisson_experiment();
TracedProgram bernoulli_traced();
TracedProgram binomial_traced(std::int64_t n);
TracedProgram geometric_traced();
TracedProgram poisson_traced();

// Geo(p)^3.
Program geometric_cube_experiment();

// ---------------------------------------------------------------------------
// Inhomogeneous random walk on the nonnegative integers: from x step up
// with probability exp(-x / p), else down; x0 = 0; returns x_n^2.

struct WalkConfig {
  int n = 10;
  double p = 10.0;  // the experiments scale p with n
};

void validate(const WalkConfig& cfg);

template <class T>
T random_walk(const WalkConfig& cfg, const T& p, Evaluation& ev) {
  validate(cfg);
  if (!(primal_value(p) > 0.0)) throw DomainError("random_walk: p must be positive");
  using std::exp;
  T x(0.0);
  for (int i = 0; i < cfg.n; ++i) {
    const T up_prob = exp(-(x / p));
    const T up = sample(Bernoulli<T>{up_prob}, ev);
    x = x + T(2.0) * up - T(1.0);
  }
  return x * x;
}

// Same walk with the score sum of d/dp log q (up) or d/dp log(1 - q) (down), q = exp(-x/p).
Traced walk_score_trace(const WalkConfig& cfg, double p, Evaluation& ev);

Program walk_experiment(const WalkConfig& cfg);
TracedProgram walk_traced(const WalkConfig& cfg);

// ---------------------------------------------------------------------------
// Stochastic Game of Life on an N x N board with dead cells beyond the edge.
// Each cell starts alive with probability p; each step every cell follows
// Conway's rule with probability `fidelity` and the opposite outcome
// otherwise, drawn as Bernoulli(table[9 * alive + live_neighbours]) in
// row-major order.

struct LifeConfig {
  int board_size = 9;
  int steps = 5;
  double p = 0.3;
  double fidelity = 0.95;
};

void validate(const LifeConfig& cfg);

// Probability of being alive next step, indexed by 9 * alive + live neighbours.
std::vector<double> life_transition_table(double fidelity);

template <class T>
using LifeObserver = std::function<void(int step, std::span<const T> board)>;

template <class T>
std::vector<T> game_of_life_board(const LifeConfig& cfg, const T& p, Evaluation& ev,
                                  const LifeObserver<T>& observer = {}) {
  validate(cfg);
  if (!(primal_value(p) > 0.0 && primal_value(p) < 1.0)) throw DomainError("game_of_life: p must lie in (0, 1)");
  const int n = cfg.board_size;
  const std::vector<double> table = life_transition_table(cfg.fidelity);
  std::vector<T> board(static_cast<std::size_t>(n) * n);
  for (auto& cell : board) cell = sample(Bernoulli<T>{p}, ev);
  if (observer) observer(0, board);
  std::vector<T> next(board.size());
  for (int t = 1; t <= cfg.steps; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        T neighbours(0.0);
        for (int di = -1; di <= 1; ++di) {
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int a = i + di;
            const int b = j + dj;
            if (a < 0 || a >= n || b < 0 || b >= n) continue;
            neighbours = neighbours + board[static_cast<std::size_t>(a) * n + b];
          }
        }
        const T& cell = board[static_cast<std::size_t>(i) * n + j];
        const T rule_index = T(9.0) * cell + neighbours;
        const T alive_prob = index_array(std::span<const double>(table), rule_index);
        next[static_cast<std::size_t>(i) * n + j] = sample(Bernoulli<T>{alive_prob}, ev);
      }
    }
    board.swap(next);
    if (observer) observer(t, board);
  }
  return board;
}

template <class T>
T game_of_life(const LifeConfig& cfg, const T& p, Evaluation& ev) {
  const std::vector<T> board = game_of_life_board(cfg, p, ev);
  T alive(0.0);
  for (const T& cell : board) alive = alive + cell;
  return alive;
}

Program life_experiment(const LifeConfig& cfg);

// ---------------------------------------------------------------------------
// Linear-Gaussian hidden Markov model
//   x_1 ~ Normal(mu, init_var I),  x_i = Phi x_{i-1} + Normal(0, Q),  y_i = x_i + Normal(0, R)
// with Phi a block-diagonal rotation. Parameters theta = vec(Phi) (column-major).

struct HmmConfig {
  int dim = 2;
  int steps = 20;
  int particles = 100;
  double angle = std::numbers::pi / 10.0;
  double q = 0.02;
  double r = 0.01;
  double init_var = 0.001;
};

struct HmmModel {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
  Eigen::VectorXd mu;
  Eigen::MatrixXd init_cov;

  int dim() const { return static_cast<int>(phi.rows()); }
};

struct HmmTrajectory {
  Eigen::MatrixXd latents;       // steps x dim
  Eigen::MatrixXd observations;  // steps x dim
};

// Planar rotations by `angle` on consecutive coordinate pairs; identity on a trailing odd coordinate.
Eigen::MatrixXd rotation_matrix(int dim, double angle);

// Builds the model of `cfg`, drawing the initial mean mu ~ Normal(0, I) from `seed`.
HmmModel make_hmm_model(const HmmConfig& cfg, std::uint64_t seed);

std::vector<double> theta_of(const Eigen::MatrixXd& phi);
Eigen::MatrixXd phi_of(std::span<const double> theta, int dim);

HmmTrajectory simulate_hmm(const HmmModel& model, int steps, std::uint64_t seed);

double kalman_loglik(const HmmModel& model, const Eigen::MatrixXd& observations, std::span<const double> theta);

struct KalmanResult {
  double loglik = 0.0;
  std::vector<double> grad;
};

// Exact log-likelihood and its gradient by central differences of step fd_step.
KalmanResult kalman_loglik_and_grad(const HmmModel& model, const Eigen::MatrixXd& observations,
                                    std::span<const double> theta, double fd_step = 1e-6);

/// Bootstrap particle filter with multinomial resampling at every step,
/// differentiated with smoothed derivatives. With resampling_grad each
/// resampled particle carries new_weight(w_k / W); without it the resampling
/// step contributes nothing to the derivative. Returns log of the likelihood
/// estimate.
SmoothedDual particle_filter_loglik(const HmmModel& model, const Eigen::MatrixXd& observations,
                                    std::span<const SmoothedDual> theta, int particles, Evaluation& ev,
                                    bool resampling_grad);

struct FilterGradient {
  double loglik = 0.0;
  std::vector<double> grad;
};

// Gradient of the filter's log-likelihood estimate w.r.t. every theta entry,
// one forward pass per entry on identical streams (seed, replicate).
FilterGradient particle_filter_gradient(const HmmModel& model, const Eigen::MatrixXd& observations,
                                        std::span<const double> theta, int particles, std::uint64_t seed,
                                        std::uint64_t replicate, bool resampling_grad);

}  // namespace stochad
