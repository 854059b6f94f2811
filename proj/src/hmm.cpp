#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stochad/experiments.hpp"

namespace stochad {

namespace {

// Symmetric square root factor L with L L^T = m; valid for singular m (e.g. zero noise).
Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

Eigen::VectorXd draw_normal(RandomStream& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.standard_normal();
  return mean + factor * z;
}

constexpr std::uint64_t kModelPurpose = 11;
constexpr std::uint64_t kTrajectoryPurpose = 12;

}  // namespace

Eigen::MatrixXd rotation_matrix(int dim, double angle) {
  if (dim < 1) throw ContractViolation("rotation_matrix: dimension must be positive");
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(dim, dim);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (int k = 0; k + 1 < dim; k += 2) {
    phi(k, k) = c;
    phi(k, k + 1) = -s;
    phi(k + 1, k) = s;
    phi(k + 1, k + 1) = c;
  }
  return phi;
}

HmmModel make_hmm_model(const HmmConfig& cfg, std::uint64_t seed) {
  if (cfg.dim < 1 || cfg.steps < 1) throw ContractViolation("hmm config: dim and steps must be positive");
  if (!(cfg.q > 0.0 && cfg.r > 0.0 && cfg.init_var > 0.0)) throw DomainError("hmm config: variances must be positive");
  HmmModel model;
  const int d = cfg.dim;
  model.phi = rotation_matrix(d, cfg.angle);
  model.q = cfg.q * Eigen::MatrixXd::Identity(d, d);
  model.r = cfg.r * Eigen::MatrixXd::Identity(d, d);
  model.init_cov = cfg.init_var * Eigen::MatrixXd::Identity(d, d);
  RandomStream rng(seed, RandomStream::derive_id(kModelPurpose, 0));
  model.mu = draw_normal(rng, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
  return model;
}

std::vector<double> theta_of(const Eigen::MatrixXd& phi) {
  return std::vector<double>(phi.data(), phi.data() + phi.size());
}

Eigen::MatrixXd phi_of(std::span<const double> theta, int dim) {
  if (theta.size() != static_cast<std::size_t>(dim) * dim) {
    throw ContractViolation("theta must have dim^2 = " + std::to_string(dim * dim) + " entries");
  }
  return Eigen::Map<const Eigen::MatrixXd>(theta.data(), dim, dim);
}

HmmTrajectory simulate_hmm(const HmmModel& model, int steps, std::uint64_t seed) {
  if (steps < 1) throw ContractViolation("simulate_hmm: steps must be positive");
  const int d = model.dim();
  RandomStream rng(seed, RandomStream::derive_id(kTrajectoryPurpose, 0));
  const Eigen::MatrixXd init_factor = noise_factor(model.init_cov);
  const Eigen::MatrixXd q_factor = noise_factor(model.q);
  const Eigen::MatrixXd r_factor = noise_factor(model.r);
  HmmTrajectory traj{Eigen::MatrixXd(steps, d), Eigen::MatrixXd(steps, d)};
  Eigen::VectorXd x = draw_normal(rng, model.mu, init_factor);
  for (int i = 0; i < steps; ++i) {
    if (i > 0) x = draw_normal(rng, model.phi * x, q_factor);
    traj.latents.row(i) = x.transpose();
    traj.observations.row(i) = draw_normal(rng, x, r_factor).transpose();
  }
  return traj;
}

double kalman_loglik(const HmmModel& model, const Eigen::MatrixXd& observations, std::span<const double> theta) {
  const int d = model.dim();
  const Eigen::MatrixXd phi = phi_of(theta, d);
  Eigen::VectorXd mean = model.mu;
  Eigen::MatrixXd cov = model.init_cov;
  double loglik = 0.0;
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    if (i > 0) {
      mean = phi * mean;
      cov = phi * cov * phi.transpose() + model.q;
    }
    const Eigen::MatrixXd innovation_cov = cov + model.r;
    const Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
    if (llt.info() != Eigen::Success) throw NumericalError("kalman: innovation covariance is not positive definite");
    const Eigen::VectorXd resid = observations.row(i).transpose() - mean;
    const Eigen::VectorXd solved = llt.solve(resid);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    loglik += -0.5 * (resid.dot(solved) + log_det + d * log_2pi);
    const Eigen::MatrixXd gain = llt.solve(cov).transpose();  // cov S^{-1}, both symmetric
    mean += gain * resid;
    cov = (Eigen::MatrixXd::Identity(d, d) - gain) * cov;
    cov = 0.5 * (cov + cov.transpose());
  }
  return loglik;
}

KalmanResult kalman_loglik_and_grad(const HmmModel& model, const Eigen::MatrixXd& observations,
                                    std::span<const double> theta, double fd_step) {
  KalmanResult result;
  result.loglik = kalman_loglik(model, observations, theta);
  std::vector<double> shifted(theta.begin(), theta.end());
  result.grad.resize(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    shifted[k] = theta[k] + fd_step;
    const double up = kalman_loglik(model, observations, shifted);
    shifted[k] = theta[k] - fd_step;
    const double down = kalman_loglik(model, observations, shifted);
    shifted[k] = theta[k];
    result.grad[k] = (up - down) / (2.0 * fd_step);
  }
  return result;
}

SmoothedDual particle_filter_loglik(const HmmModel& model, const Eigen::MatrixXd& observations,
                                    std::span<const SmoothedDual> theta, int particles, Evaluation& ev,
                                    bool resampling_grad) {
  const int d = model.dim();
  if (particles < 2) throw ContractViolation("particle filter needs at least 2 particles");
  if (theta.size() != static_cast<std::size_t>(d) * d) throw ContractViolation("theta must have dim^2 entries");
  const auto k_count = static_cast<std::size_t>(particles);
  const auto dim = static_cast<std::size_t>(d);
  RandomStream& rng = ev.stream();

  const Eigen::MatrixXd init_factor = noise_factor(model.init_cov);
  const Eigen::MatrixXd q_factor = noise_factor(model.q);
  const Eigen::LLT<Eigen::MatrixXd> r_llt(model.r);
  if (r_llt.info() != Eigen::Success) throw NumericalError("particle filter: observation covariance is singular");
  const Eigen::MatrixXd r_inv = r_llt.solve(Eigen::MatrixXd::Identity(d, d));
  const double log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) +
                                  2.0 * r_llt.matrixL().toDenseMatrix().diagonal().array().log().sum());

  // Particle k, coordinate j lives at positions[k * dim + j]; theta is column-major Phi.
  std::vector<SmoothedDual> positions(k_count * dim);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Eigen::VectorXd x0 = draw_normal(rng, model.mu, init_factor);
    for (std::size_t j = 0; j < dim; ++j) positions[k * dim + j] = SmoothedDual(x0[static_cast<Eigen::Index>(j)]);
  }
  std::vector<SmoothedDual> weights(k_count, SmoothedDual(1.0 / particles));
  std::vector<SmoothedDual> moved(positions.size());
  std::vector<SmoothedDual> log_obs(k_count);
  std::vector<double> cumulative(k_count);
  SmoothedDual loglik(0.0);

  const Eigen::Index steps = observations.rows();
  for (Eigen::Index i = 0; i < steps; ++i) {
    if (i > 0) {
      for (std::size_t k = 0; k < k_count; ++k) {
        Eigen::VectorXd z(d);
        for (int j = 0; j < d; ++j) z[j] = rng.standard_normal();
        const Eigen::VectorXd noise = q_factor * z;
        for (std::size_t row = 0; row < dim; ++row) {
          SmoothedDual acc(noise[static_cast<Eigen::Index>(row)]);
          for (std::size_t col = 0; col < dim; ++col) acc += theta[col * dim + row] * positions[k * dim + col];
          moved[k * dim + row] = acc;
        }
      }
      positions.swap(moved);
    }

    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      SmoothedDual quad(0.0);
      for (std::size_t a = 0; a < dim; ++a) {
        const SmoothedDual ra = SmoothedDual(observations(i, static_cast<Eigen::Index>(a))) - positions[k * dim + a];
        for (std::size_t b = 0; b < dim; ++b) {
          const SmoothedDual rb =
              SmoothedDual(observations(i, static_cast<Eigen::Index>(b))) - positions[k * dim + b];
          quad += SmoothedDual(r_inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) * ra * rb;
        }
      }
      log_obs[k] = SmoothedDual(log_norm) - SmoothedDual(0.5) * quad;
      peak = std::max(peak, log_obs[k].value);
    }
    // Scale by a constant with zero derivative to keep the weights representable.
    SmoothedDual total(0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
      weights[k] = weights[k] * exp(log_obs[k] - SmoothedDual(peak));
      total += weights[k];
    }
    if (!(total.value > 0.0) || !std::isfinite(total.value)) {
      throw NumericalError("particle filter: all importance weights vanished; increase the particle count");
    }
    loglik += SmoothedDual(peak) + log(total);
    if (i + 1 == steps) break;

    // Multinomial resampling. Factoring the weight sum into the likelihood
    // leaves each survivor with (1/K) * new_weight(w_k / W).
    double running = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      running += weights[k].value / total.value;
      cumulative[k] = running;
    }
    std::vector<SmoothedDual> resampled_pos(positions.size());
    std::vector<SmoothedDual> resampled_w(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double u = rng.uniform() * running;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const std::size_t parent = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), k_count - 1);
      for (std::size_t j = 0; j < dim; ++j) resampled_pos[k * dim + j] = positions[parent * dim + j];
      const SmoothedDual share = SmoothedDual(1.0 / particles);
      resampled_w[k] = resampling_grad ? share * new_weight(weights[parent] / total) : share;
    }
    positions.swap(resampled_pos);
    weights.swap(resampled_w);
  }
  return loglik;
}

FilterGradient particle_filter_gradient(const HmmModel& model, const Eigen::MatrixXd& observations,
                                        std::span<const double> theta, int particles, std::uint64_t seed,
                                        std::uint64_t replicate, bool resampling_grad) {
  FilterGradient result;
  result.grad.resize(theta.size());
  std::vector<SmoothedDual> seeded(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    for (std::size_t j = 0; j < theta.size(); ++j) seeded[j] = SmoothedDual(theta[j], j == k ? 1.0 : 0.0);
    Evaluation ev(seed, replicate);
    const SmoothedDual out = particle_filter_loglik(model, observations, seeded, particles, ev, resampling_grad);
    result.loglik = out.value;
    result.grad[k] = out.sderiv;
  }
  return result;
}

}  // namespace stochad
