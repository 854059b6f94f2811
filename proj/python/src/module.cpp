#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stochad/distributions.hpp"
#include "stochad/errors.hpp"
#include "stochad/estimators.hpp"
#include "stochad/experiments.hpp"
#include "stochad/smoothing.hpp"
#include "stochad/triple.hpp"

namespace py = pybind11;
using namespace stochad;

namespace {

template <class T>
std::string repr(const T& x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

RunOptions options(std::uint64_t seed, std::uint64_t samples, unsigned threads, DerivativeMode mode) {
  return RunOptions{seed, samples, threads, mode};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic-triple automatic differentiation of discrete randomness";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);
  py::register_exception<IndexError>(m, "IndexError", PyExc_IndexError);
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", PyExc_TypeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<DerivativeMode>(m, "DerivativeMode")
      .value("right", DerivativeMode::right)
      .value("left", DerivativeMode::left);
  py::enum_<SmoothingFlavor>(m, "SmoothingFlavor")
      .value("right", SmoothingFlavor::right)
      .value("left", SmoothingFlavor::left)
      .value("straight_through", SmoothingFlavor::straight_through);
  py::enum_<Coupling>(m, "Coupling").value("common", Coupling::common).value("independent", Coupling::independent);
  py::enum_<ControlVariate>(m, "ControlVariate")
      .value("none", ControlVariate::none)
      .value("batch_mean", ControlVariate::batch_mean);

  py::class_<Perturbation>(m, "Perturbation")
      .def(py::init<double, double, Tag>(), py::arg("delta"), py::arg("weight"), py::arg("tag"))
      .def_readwrite("delta", &Perturbation::delta)
      .def_readwrite("weight", &Perturbation::weight)
      .def_readwrite("tag", &Perturbation::tag)
      .def(py::self == py::self);

  py::class_<StochasticTriple>(m, "StochasticTriple")
      .def(py::init<double, double, std::optional<Perturbation>>(), py::arg("value"), py::arg("delta") = 0.0,
           py::arg("pert") = std::nullopt)
      .def_readwrite("value", &StochasticTriple::value)
      .def_readwrite("delta", &StochasticTriple::delta)
      .def_readwrite("pert", &StochasticTriple::pert)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self)
      .def(py::self / py::self)
      .def(py::self + double())
      .def(double() + py::self)
      .def(py::self * double())
      .def(double() * py::self)
      .def(-py::self)
      .def("__repr__", &repr<StochasticTriple>);
  py::implicitly_convertible<double, StochasticTriple>();

  m.def("make_input", &make_input, py::arg("p"));
  m.def("derivative_contribution", &derivative_contribution, py::arg("x"), py::arg("mode") = DerivativeMode::right);
  m.def("exp", py::overload_cast<const StochasticTriple&>(&stochad::exp));
  m.def("log", py::overload_cast<const StochasticTriple&>(&stochad::log));
  m.def("square", py::overload_cast<const StochasticTriple&>(&stochad::square));
  m.def("cube", py::overload_cast<const StochasticTriple&>(&stochad::cube));
  m.def("combine_perturbations_at", &combine_perturbations_at, py::arg("a"), py::arg("b"), py::arg("u"));

  py::class_<SmoothedDual>(m, "SmoothedDual")
      .def(py::init<double, double>(), py::arg("value"), py::arg("sderiv") = 0.0)
      .def_readwrite("value", &SmoothedDual::value)
      .def_readwrite("sderiv", &SmoothedDual::sderiv)
      .def("__repr__", &repr<SmoothedDual>);
  m.def("smooth_collapse", &smooth_collapse, py::arg("x"), py::arg("mode") = DerivativeMode::right);
  m.def("smooth_bernoulli", &smooth_bernoulli, py::arg("p"), py::arg("x"), py::arg("flavor"));
  m.def("new_weight", &new_weight, py::arg("p"));

  py::class_<Bernoulli<double>>(m, "Bernoulli").def(py::init<double>(), py::arg("p"));
  py::class_<Binomial<double>>(m, "Binomial").def(py::init<std::int64_t, double>(), py::arg("n"), py::arg("p"));
  py::class_<Geometric<double>>(m, "Geometric").def(py::init<double>(), py::arg("p"));
  py::class_<Poisson<double>>(m, "Poisson").def(py::init<double>(), py::arg("rate"));
  py::class_<DistWeights>(m, "DistWeights")
      .def_readonly("down", &DistWeights::down)
      .def_readonly("up", &DistWeights::up);
  m.def("discrete_weights", &discrete_weights, py::arg("dist"), py::arg("x"), py::arg("mode") = DerivativeMode::right);
  m.def("inversion_quantile", &inversion_quantile, py::arg("dist"), py::arg("u"));
  m.def("pmf", &pmf, py::arg("dist"), py::arg("x"));
  m.def("cdf", &cdf, py::arg("dist"), py::arg("x"));
  m.def("score", &score, py::arg("dist"), py::arg("x"));

  py::class_<Program>(m, "Program").def_readonly("name", &Program::name);
  py::class_<TracedProgram>(m, "TracedProgram").def_readonly("name", &TracedProgram::name);
  m.def("toy_experiment", &toy_experiment);
  m.def("two_step_walk_experiment", &two_step_walk_experiment);
  m.def("bernoulli_experiment", &bernoulli_experiment);
  m.def("binomial_experiment", &binomial_experiment, py::arg("n"));
  m.def("geometric_experiment", &geometric_experiment);
  m.def("poisson_experiment", &poisson_experiment);
  m.def("geometric_cube_experiment", &geometric_cube_experiment);
  m.def("bernoulli_traced", &bernoulli_traced);
  m.def("binomial_traced", &binomial_traced, py::arg("n"));
  m.def("geometric_traced", &geometric_traced);
  m.def("poisson_traced", &poisson_traced);
  m.def(
      "walk_experiment", [](int n, double p) { return walk_experiment(WalkConfig{n, p}); }, py::arg("n"),
      py::arg("p"));
  m.def(
      "walk_traced", [](int n, double p) { return walk_traced(WalkConfig{n, p}); }, py::arg("n"), py::arg("p"));
  m.def(
      "life_experiment",
      [](int board_size, int steps, double p, double fidelity) {
        return life_experiment(LifeConfig{board_size, steps, p, fidelity});
      },
      py::arg("board_size") = 9, py::arg("steps") = 5, py::arg("p") = 0.3, py::arg("fidelity") = 0.95);

  py::class_<EstimateSummary>(m, "EstimateSummary")
      .def_readonly("estimator", &EstimateSummary::estimator)
      .def_readonly("mean", &EstimateSummary::mean)
      .def_readonly("variance", &EstimateSummary::variance)
      .def_readonly("std_error", &EstimateSummary::std_error)
      .def_readonly("n", &EstimateSummary::n)
      .def_readonly("seed", &EstimateSummary::seed)
      .def_readonly("seconds", &EstimateSummary::seconds)
      .def("__repr__", [](const EstimateSummary& s) {
        std::ostringstream os;
        os << "EstimateSummary(" << s.estimator << ", mean=" << s.mean << ", std_error=" << s.std_error
           << ", n=" << s.n << ")";
        return os.str();
      });

  const auto gil = py::call_guard<py::gil_scoped_release>();
  m.def(
      "estimate_mean",
      [](const Program& prog, double p, std::uint64_t seed, std::uint64_t samples, unsigned threads,
         DerivativeMode mode) { return estimate_mean(prog, p, options(seed, samples, threads, mode)); },
      py::arg("program"), py::arg("p"), py::arg("seed") = 0, py::arg("samples") = 10000, py::arg("threads") = 1,
      py::arg("mode") = DerivativeMode::right, gil);
  m.def(
      "estimate_smoothed_mean",
      [](const Program& prog, double p, std::uint64_t seed, std::uint64_t samples, unsigned threads,
         SmoothingFlavor flavor) {
        return estimate_smoothed_mean(prog, p, options(seed, samples, threads, DerivativeMode::right), flavor);
      },
      py::arg("program"), py::arg("p"), py::arg("seed") = 0, py::arg("samples") = 10000, py::arg("threads") = 1,
      py::arg("flavor") = SmoothingFlavor::straight_through, gil);
  m.def(
      "estimate_value",
      [](const Program& prog, double p, std::uint64_t seed, std::uint64_t samples, unsigned threads) {
        return estimate_value(prog, p, options(seed, samples, threads, DerivativeMode::right));
      },
      py::arg("program"), py::arg("p"), py::arg("seed") = 0, py::arg("samples") = 10000, py::arg("threads") = 1,
      gil);
  m.def(
      "finite_difference",
      [](const Program& prog, double p, double step, std::uint64_t seed, std::uint64_t samples, unsigned threads,
         Coupling coupling) {
        return finite_difference(prog, p, step, options(seed, samples, threads, DerivativeMode::right), coupling);
      },
      py::arg("program"), py::arg("p"), py::arg("step"), py::arg("seed") = 0, py::arg("samples") = 10000,
      py::arg("threads") = 1, py::arg("coupling") = Coupling::common, gil);
  m.def(
      "score_function",
      [](const TracedProgram& prog, double p, std::uint64_t seed, std::uint64_t samples, unsigned threads,
         ControlVariate cv) {
        return score_function(prog, p, options(seed, samples, threads, DerivativeMode::right), cv);
      },
      py::arg("program"), py::arg("p"), py::arg("seed") = 0, py::arg("samples") = 10000, py::arg("threads") = 1,
      py::arg("cv") = ControlVariate::none, gil);

  py::class_<HmmConfig>(m, "HmmConfig")
      .def(py::init<>())
      .def_readwrite("dim", &HmmConfig::dim)
      .def_readwrite("steps", &HmmConfig::steps)
      .def_readwrite("particles", &HmmConfig::particles)
      .def_readwrite("angle", &HmmConfig::angle)
      .def_readwrite("q", &HmmConfig::q)
      .def_readwrite("r", &HmmConfig::r)
      .def_readwrite("init_var", &HmmConfig::init_var);
  py::class_<HmmModel>(m, "HmmModel")
      .def_readwrite("phi", &HmmModel::phi)
      .def_readwrite("q", &HmmModel::q)
      .def_readwrite("r", &HmmModel::r)
      .def_readwrite("mu", &HmmModel::mu)
      .def_readwrite("init_cov", &HmmModel::init_cov);
  py::class_<HmmTrajectory>(m, "HmmTrajectory")
      .def_readonly("latents", &HmmTrajectory::latents)
      .def_readonly("observations", &HmmTrajectory::observations);
  m.def("make_hmm_model", &make_hmm_model, py::arg("config"), py::arg("seed"));
  m.def("simulate_hmm", &simulate_hmm, py::arg("model"), py::arg("steps"), py::arg("seed"));
  m.def("rotation_matrix", &rotation_matrix, py::arg("dim"), py::arg("angle"));
  m.def("theta_of", &theta_of, py::arg("phi"));
  m.def(
      "kalman_loglik_and_grad",
      [](const HmmModel& model, const Eigen::MatrixXd& y, const std::vector<double>& theta, double step) {
        const auto r = kalman_loglik_and_grad(model, y, theta, step);
        return py::make_tuple(r.loglik, r.grad);
      },
      py::arg("model"), py::arg("observations"), py::arg("theta"), py::arg("fd_step") = 1e-6);
  m.def(
      "particle_filter_gradient",
      [](const HmmModel& model, const Eigen::MatrixXd& y, const std::vector<double>& theta, int particles,
         std::uint64_t seed, std::uint64_t replicate, bool resampling_grad) {
        FilterGradient g;
        {
          py::gil_scoped_release release;
          g = particle_filter_gradient(model, y, theta, particles, seed, replicate, resampling_grad);
        }
        return py::make_tuple(g.loglik, g.grad);
      },
      py::arg("model"), py::arg("observations"), py::arg("theta"), py::arg("particles"), py::arg("seed"),
      py::arg("replicate") = 0, py::arg("resampling_grad") = true);
}
