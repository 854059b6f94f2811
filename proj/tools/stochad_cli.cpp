// stochad: run the experiments and estimator comparisons and write CSV/JSON reports.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stochad/distributions.hpp"
#include "stochad/errors.hpp"
#include "stochad/estimators.hpp"
#include "stochad/experiments.hpp"
#include "stochad/report.hpp"

using namespace stochad;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::uint64_t samples = 10000;
  unsigned threads = 1;
  std::string out;
  std::string format = "csv";
  std::string mode = "right";
  bool timing = false;
};

struct Params {
  std::optional<double> p;
  std::optional<std::int64_t> n;
  int board_size = 9;
  int steps = 5;
  int particles = 100;
  int dim = 2;
  std::string smoothing = "off";
  std::string resampling_grad = "on";
  std::optional<double> fd_step;
  std::string cv = "none";
  std::string dist = "binomial";
  std::string experiment = "walk";
  std::vector<std::int64_t> grid{10, 50, 100};
};

RunOptions run_options(const Common& c) {
  RunOptions opts;
  opts.seed = c.seed;
  opts.samples = c.samples;
  opts.threads = c.threads;
  opts.mode = c.mode == "left" ? DerivativeMode::left : DerivativeMode::right;
  return opts;
}

double param_or(const std::optional<double>& value, double fallback) { return value.value_or(fallback); }

ControlVariate control_variate(const Params& p) {
  return p.cv == "batch" ? ControlVariate::batch_mean : ControlVariate::none;
}

std::vector<ReportRow> run_toy(const Common& c, const Params& prm) {
  const double p = param_or(prm.p, 0.6);
  const auto opts = run_options(c);
  const Program prog = toy_experiment();
  std::vector<ReportRow> rows{make_row("toy", p, estimate_mean(prog, p, opts), c.timing)};
  if (prm.smoothing == "on") rows.push_back(make_row("toy", p, estimate_smoothed_mean(prog, p, opts), c.timing));
  if (prm.fd_step) {
    rows.push_back(make_row("toy", p, finite_difference(prog, p, *prm.fd_step, opts, Coupling::common), c.timing));
    rows.push_back(
        make_row("toy", p, finite_difference(prog, p, *prm.fd_step, opts, Coupling::independent), c.timing));
  }
  return rows;
}

std::vector<ReportRow> run_walk(const Common& c, const Params& prm) {
  WalkConfig cfg;
  if (prm.n) cfg.n = static_cast<int>(*prm.n);
  cfg.p = param_or(prm.p, static_cast<double>(cfg.n));
  validate(cfg);
  const auto opts = run_options(c);
  const Program prog = walk_experiment(cfg);
  std::vector<ReportRow> rows{make_row("walk", cfg.p, estimate_mean(prog, cfg.p, opts), c.timing)};
  if (prm.smoothing == "on") {
    rows.push_back(make_row("walk", cfg.p, estimate_smoothed_mean(prog, cfg.p, opts), c.timing));
  }
  rows.push_back(make_row("walk", cfg.p, score_function(walk_traced(cfg), cfg.p, opts, control_variate(prm)),
                          c.timing));
  if (prm.fd_step) {
    rows.push_back(
        make_row("walk", cfg.p, finite_difference(prog, cfg.p, *prm.fd_step, opts, Coupling::common), c.timing));
  }
  return rows;
}

std::vector<ReportRow> run_life(const Common& c, const Params& prm) {
  LifeConfig cfg;
  cfg.board_size = prm.board_size;
  cfg.steps = prm.steps;
  cfg.p = param_or(prm.p, cfg.p);
  validate(cfg);
  const double step = param_or(prm.fd_step, 0.02);
  const auto opts = run_options(c);
  const Program prog = life_experiment(cfg);
  return {make_row("life", cfg.p, estimate_mean(prog, cfg.p, opts), c.timing),
          make_row("life", cfg.p, finite_difference(prog, cfg.p, step, opts, Coupling::common), c.timing)};
}

// One row per theta entry (parameter = column-major index) for the Kalman
// reference and for the particle-filter gradient over `samples` replicates.
std::vector<ReportRow> run_pfilter(const Common& c, const Params& prm) {
  HmmConfig cfg;
  cfg.dim = prm.dim;
  if (prm.n) cfg.steps = static_cast<int>(*prm.n);
  cfg.particles = prm.particles;
  if (cfg.particles < 2) throw UsageError("--particles must be at least 2");
  const HmmModel model = make_hmm_model(cfg, c.seed);
  const HmmTrajectory traj = simulate_hmm(model, cfg.steps, c.seed);
  const std::vector<double> theta = theta_of(model.phi);
  const bool resampling_grad = prm.resampling_grad == "on";

  const auto start = std::chrono::steady_clock::now();
  const KalmanResult exact = kalman_loglik_and_grad(model, traj.observations, theta, param_or(prm.fd_step, 1e-6));
  const double kalman_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::size_t d2 = theta.size();
  std::vector<std::vector<double>> grads(d2, std::vector<double>(c.samples));
  std::vector<double> logliks(c.samples);
  const auto pf_start = std::chrono::steady_clock::now();
  run_replicates(c.samples, c.threads, [&](std::uint64_t r) {
    const FilterGradient g =
        particle_filter_gradient(model, traj.observations, theta, cfg.particles, c.seed, r, resampling_grad);
    for (std::size_t k = 0; k < d2; ++k) grads[k][r] = g.grad[k];
    logliks[r] = g.loglik;
    return 0.0;
  });
  const double pf_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - pf_start).count();

  const std::string name = resampling_grad ? "smoothed" : "smoothed_no_resampling_grad";
  std::vector<ReportRow> rows;
  EstimateSummary ref{"kalman_loglik", exact.loglik, 0.0, 0.0, 1, c.seed, kalman_seconds};
  rows.push_back(make_row("pfilter", -1.0, ref, c.timing));
  rows.push_back(make_row("pfilter", -1.0, summarize(logliks, name + "_loglik", c.seed, pf_seconds), c.timing));
  for (std::size_t k = 0; k < d2; ++k) {
    const double index = static_cast<double>(k);
    EstimateSummary kal{"kalman", exact.grad[k], 0.0, 0.0, 1, c.seed, kalman_seconds};
    rows.push_back(make_row("pfilter", index, kal, c.timing));
    rows.push_back(make_row("pfilter", index, summarize(grads[k], name, c.seed, pf_seconds), c.timing));
  }
  return rows;
}

std::vector<ReportRow> run_dist_check(const Common& c, const Params& prm) {
  const auto opts = run_options(c);
  Program prog;
  TracedProgram traced;
  double p = 0.0;
  double exact = 0.0;
  if (prm.dist == "bernoulli") {
    p = param_or(prm.p, 0.6);
    prog = bernoulli_experiment();
    traced = bernoulli_traced();
    exact = 1.0;
  } else if (prm.dist == "binomial") {
    p = param_or(prm.p, 0.6);
    const std::int64_t n = prm.n.value_or(10);
    prog = binomial_experiment(n);
    traced = binomial_traced(n);
    exact = static_cast<double>(n);
  } else if (prm.dist == "geometric") {
    p = param_or(prm.p, 0.5);
    prog = geometric_experiment();
    traced = geometric_traced();
    exact = -1.0 / (p * p);
  } else {
    p = param_or(prm.p, 2.0);
    prog = poisson_experiment();
    traced = poisson_traced();
    exact = 1.0;
  }
  const std::string experiment = prm.dist;
  std::vector<ReportRow> rows;
  rows.push_back(make_row(experiment, p, EstimateSummary{"exact", exact, 0.0, 0.0, 0, c.seed, 0.0}, c.timing));
  rows.push_back(make_row(experiment, p, estimate_mean(prog, p, opts), c.timing));
  if (prm.smoothing == "on") rows.push_back(make_row(experiment, p, estimate_smoothed_mean(prog, p, opts), c.timing));
  rows.push_back(make_row(experiment, p, score_function(traced, p, opts, control_variate(prm)), c.timing));
  if (prm.fd_step) {
    rows.push_back(make_row(experiment, p, finite_difference(prog, p, *prm.fd_step, opts, Coupling::common), c.timing));
  }
  return rows;
}

// Variance of each estimator across a grid of sizes: walk steps (with p = n)
// or binomial trial counts (at --p, default 0.6).
std::vector<ReportRow> run_variance_study(const Common& c, const Params& prm) {
  const auto opts = run_options(c);
  std::vector<ReportRow> rows;
  for (std::int64_t n : prm.grid) {
    if (n < 1) throw UsageError("--grid values must be positive");
    Program prog;
    TracedProgram traced;
    double p = 0.0;
    if (prm.experiment == "walk") {
      const WalkConfig cfg{static_cast<int>(n), static_cast<double>(n)};
      prog = walk_experiment(cfg);
      traced = walk_traced(cfg);
      p = cfg.p;
    } else {
      p = param_or(prm.p, 0.6);
      prog = binomial_experiment(n);
      traced = binomial_traced(n);
    }
    const std::string experiment = prm.experiment + "_n" + std::to_string(n);
    rows.push_back(make_row(experiment, static_cast<double>(n), estimate_mean(prog, p, opts), c.timing));
    rows.push_back(make_row(experiment, static_cast<double>(n),
                            score_function(traced, p, opts, ControlVariate::batch_mean), c.timing));
    rows.push_back(
        make_row(experiment, static_cast<double>(n), score_function(traced, p, opts, ControlVariate::none), c.timing));
  }
  return rows;
}

void emit(const Common& c, const std::vector<ReportRow>& rows, const ReportMetadata& meta) {
  const bool json = c.format == "json";
  auto write = [&](std::ostream& os) {
    if (json) {
      write_json(os, rows);
    } else {
      write_csv(os, meta, rows);
    }
  };
  if (c.out.empty()) {
    write(std::cout);
    if (json) std::cerr << metadata_json(meta) << '\n';
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file '" + c.out + "' for writing");
  write(file);
  if (!file) throw std::runtime_error("failed writing output file '" + c.out + "'");
  if (json) {
    std::ofstream side(c.out + ".meta.json", std::ios::binary);
    side << metadata_json(meta) << '\n';
    if (!side) throw std::runtime_error("failed writing metadata file '" + c.out + ".meta.json'");
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Base seed of all random streams");
  sub->add_option("--samples", c.samples, "Number of replicates per estimate")->check(CLI::Range(2ull, 1ull << 40));
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  sub->add_option("--out", c.out, "Output file (default: stdout)");
  sub->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--mode", c.mode, "Derivative direction")->check(CLI::IsMember({"right", "left"}));
  sub->add_flag("--timing", c.timing, "Fill the per-row seconds column (makes reports run-dependent)");
}

const CLI::Validator kOnOff = CLI::IsMember({"on", "off"});

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-triple derivative estimation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_describe());
  Common c;
  Params prm;

  auto* toy = app.add_subcommand("toy", "Toy program a*c*Normal(b, a)");
  add_common(toy, c);
  toy->add_option("--p", prm.p, "Parameter (default 0.6)");
  toy->add_option("--smoothing", prm.smoothing, "Add the smoothed estimator")->check(kOnOff);
  toy->add_option("--fd-step", prm.fd_step, "Add finite-difference estimators with this step");

  auto* walk = app.add_subcommand("walk", "Inhomogeneous random walk, payoff x_n^2");
  add_common(walk, c);
  walk->add_option("--n", prm.n, "Number of steps (default 10)");
  walk->add_option("--p", prm.p, "Parameter (default n)");
  walk->add_option("--smoothing", prm.smoothing, "Add the smoothed estimator")->check(kOnOff);
  walk->add_option("--cv", prm.cv, "Score-function control variate")->check(CLI::IsMember({"none", "batch"}));
  walk->add_option("--fd-step", prm.fd_step, "Add a finite-difference estimator with this step");

  auto* life = app.add_subcommand("life", "Stochastic Game of Life, count of living cells");
  add_common(life, c);
  life->add_option("--board-size", prm.board_size, "Board side N");
  life->add_option("--steps", prm.steps, "Time steps T");
  life->add_option("--p", prm.p, "Initial-alive probability (default 0.3)");
  life->add_option("--fd-step", prm.fd_step, "Finite-difference step (default 0.02)");

  auto* pfilter = app.add_subcommand("pfilter", "Particle-filter log-likelihood gradient vs Kalman filter");
  add_common(pfilter, c);
  pfilter->add_option("--dim", prm.dim, "Latent dimension d")->check(CLI::Range(1, 64));
  pfilter->add_option("--n", prm.n, "Number of observations (default 20)");
  pfilter->add_option("--particles", prm.particles, "Particle count K");
  pfilter->add_option("--resampling-grad", prm.resampling_grad, "Differentiate the resampling step")->check(kOnOff);
  pfilter->add_option("--fd-step", prm.fd_step, "Kalman finite-difference step (default 1e-6)");

  auto* dist = app.add_subcommand("dist-check", "Single draw of a discrete distribution");
  add_common(dist, c);
  dist->add_option("--dist", prm.dist, "Distribution")
      ->check(CLI::IsMember({"bernoulli", "binomial", "geometric", "poisson"}));
  dist->add_option("--n", prm.n, "Binomial trial count (default 10)");
  dist->add_option("--p", prm.p, "Probability, or rate for poisson");
  dist->add_option("--smoothing", prm.smoothing, "Add the smoothed estimator")->check(kOnOff);
  dist->add_option("--cv", prm.cv, "Score-function control variate")->check(CLI::IsMember({"none", "batch"}));
  dist->add_option("--fd-step", prm.fd_step, "Add a finite-difference estimator with this step");

  auto* study = app.add_subcommand("variance-study", "Estimator variances across problem sizes");
  add_common(study, c);
  study->add_option("--experiment", prm.experiment, "Experiment")->check(CLI::IsMember({"walk", "binomial"}));
  study->add_option("--grid", prm.grid, "Comma-separated sizes")->delimiter(',');
  study->add_option("--p", prm.p, "Binomial probability (default 0.6)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (prm.fd_step && !(*prm.fd_step > 0.0)) throw UsageError("--fd-step must be positive");
    if (!c.out.empty()) {
      const auto parent = std::filesystem::path(c.out).parent_path();
      if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw UsageError("output directory '" + parent.string() + "' does not exist");
      }
    }
    const auto start = std::chrono::steady_clock::now();
    std::vector<ReportRow> rows;
    if (toy->parsed()) {
      rows = run_toy(c, prm);
    } else if (walk->parsed()) {
      rows = run_walk(c, prm);
    } else if (life->parsed()) {
      rows = run_life(c, prm);
    } else if (pfilter->parsed()) {
      rows = run_pfilter(c, prm);
    } else if (dist->parsed()) {
      rows = run_dist_check(c, prm);
    } else {
      rows = run_variance_study(c, prm);
    }
    std::ostringstream command;
    for (int i = 1; i < argc; ++i) command << (i > 1 ? " " : "") << argv[i];
    ReportMetadata meta{c.seed, build_describe(), command.str(),
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    emit(c, rows, meta);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const DomainError& e) {
    std::cerr << "parameter out of domain: " << e.what() << '\n';
    return kUsageError;
  } catch (const EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
