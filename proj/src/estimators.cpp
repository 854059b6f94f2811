#include "stochad/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "stochad/errors.hpp"

namespace stochad {

namespace {

constexpr std::uint64_t kIndependentOffset = 1ULL << 63;
constexpr std::uint64_t kPilotOffset = 1ULL << 62;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void require_samples(std::uint64_t n) {
  if (n < 2) throw ContractViolation("at least 2 samples are required, got " + std::to_string(n));
}

}  // namespace

EstimateSummary summarize(std::span<const double> values, std::string estimator, std::uint64_t seed,
                          double seconds) {
  require_samples(values.size());
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {  // Kahan summation
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  EstimateSummary s;
  s.estimator = std::move(estimator);
  s.mean = mean;
  s.variance = ss / (n - 1.0);
  s.std_error = std::sqrt(s.variance / n);
  s.n = values.size();
  s.seed = seed;
  s.seconds = seconds;
  return s;
}

std::vector<double> run_replicates(std::uint64_t n, unsigned threads,
                                   const std::function<double(std::uint64_t)>& replicate) {
  std::vector<double> out(n);
  const unsigned workers = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(n, 1)));
  if (workers <= 1) {
    for (std::uint64_t r = 0; r < n; ++r) out[r] = replicate(r);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t r = w; r < n; r += workers) out[r] = replicate(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

double derivative_estimate(const Program& prog, double p, Evaluation& ev) {
  const StochasticTriple out = prog.triple(make_input(p), ev);
  return derivative_contribution(out, ev.mode());
}

double smoothed_estimate(const Program& prog, double p, Evaluation& ev) {
  if (!prog.smoothed) throw ContractViolation("program '" + prog.name + "' has no smoothed variant");
  return prog.smoothed(SmoothedDual(p, 1.0), ev).sderiv;
}

EstimateSummary estimate_mean(const Program& prog, double p, const RunOptions& opts) {
  require_samples(opts.samples);
  Stopwatch clock;
  const auto values = run_replicates(opts.samples, opts.threads, [&](std::uint64_t r) {
    Evaluation ev(opts.seed, r, opts.mode);
    return derivative_estimate(prog, p, ev);
  });
  return summarize(values, "triple", opts.seed, clock.seconds());
}

EstimateSummary estimate_smoothed_mean(const Program& prog, double p, const RunOptions& opts,
                                       SmoothingFlavor bernoulli_flavor) {
  require_samples(opts.samples);
  if (!prog.smoothed) throw ContractViolation("program '" + prog.name + "' has no smoothed variant");
  Stopwatch clock;
  const auto values = run_replicates(opts.samples, opts.threads, [&](std::uint64_t r) {
    Evaluation ev(opts.seed, r, opts.mode);
    ev.set_bernoulli_flavor(bernoulli_flavor);
    return smoothed_estimate(prog, p, ev);
  });
  return summarize(values, "smoothed", opts.seed, clock.seconds());
}

EstimateSummary estimate_value(const Program& prog, double p, const RunOptions& opts) {
  require_samples(opts.samples);
  Stopwatch clock;
  const auto values = run_replicates(opts.samples, opts.threads, [&](std::uint64_t r) {
    Evaluation ev(opts.seed, r, opts.mode);
    return prog.primal(p, ev);
  });
  return summarize(values, "value", opts.seed, clock.seconds());
}

EstimateSummary finite_difference(const Program& prog, double p, double step, const RunOptions& opts,
                                  Coupling coupling) {
  require_samples(opts.samples);
  if (!(step != 0.0) || !std::isfinite(step)) throw ContractViolation("finite_difference: step must be finite and nonzero");
  Stopwatch clock;
  const auto values = run_replicates(opts.samples, opts.threads, [&](std::uint64_t r) {
    double upper;
    {
      Evaluation ev(opts.seed, r, opts.mode);
      upper = prog.primal(p + step, ev);
    }
    const std::uint64_t other = coupling == Coupling::common ? r : r + kIndependentOffset;
    Evaluation ev(opts.seed, other, opts.mode);
    const double lower = prog.primal(p - step, ev);
    return (upper - lower) / (2.0 * step);
  });
  return summarize(values, coupling == Coupling::common ? "fd_common" : "fd_independent", opts.seed,
                   clock.seconds());
}

EstimateSummary score_function(const TracedProgram& prog, double p, const RunOptions& opts, ControlVariate cv,
                               double pilot_fraction) {
  require_samples(opts.samples);
  Stopwatch clock;
  double baseline = 0.0;
  if (cv == ControlVariate::batch_mean) {
    const auto pilot_n = std::max<std::uint64_t>(
        2, static_cast<std::uint64_t>(std::llround(pilot_fraction * static_cast<double>(opts.samples))));
    const auto pilot = run_replicates(pilot_n, opts.threads, [&](std::uint64_t r) {
      Evaluation ev(opts.seed, r + kPilotOffset, opts.mode);
      return prog.evaluate(p, ev).output;
    });
    baseline = summarize(pilot, "pilot", opts.seed).mean;
  }
  const auto values = run_replicates(opts.samples, opts.threads, [&](std::uint64_t r) {
    Evaluation ev(opts.seed, r, opts.mode);
    const Traced t = prog.evaluate(p, ev);
    return (t.output - baseline) * t.score;
  });
  return summarize(values, cv == ControlVariate::none ? "score" : "score_cv", opts.seed, clock.seconds());
}

}  // namespace stochad
