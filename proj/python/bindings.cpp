// Thin pybind11 layer. Structured values cross the boundary as JSON text in
// the same shapes the CLI writes; the Python package decodes them.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fragscope/bridge_planner.hpp"
#include "fragscope/embedding_metrics.hpp"
#include "fragscope/errors.hpp"
#include "fragscope/factor_model.hpp"
#include "fragscope/io.hpp"
#include "fragscope/parallel.hpp"
#include "fragscope/report.hpp"
#include "fragscope/shortcut_sim.hpp"

namespace py = pybind11;
using namespace fragscope;
using nlohmann::json;

namespace {

factor::MixtureModel mixture(const std::string& doc) { return io::mixture_from_json(json::parse(doc)); }

std::string mixture_text(const factor::MixtureModel& mix) { return io::mixture_to_json(mix).dump(); }

embedding::EmbeddingSet embeddings(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                                   bool normalize) {
  if (a.ndim() != 2) throw ValidationError("embeddings must be a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> values(a.data(), a.data() + rows * cols);
  if (!normalize) return embedding::EmbeddingSet(rows, cols, std::move(values), true);
  return embedding::normalize_rows(embedding::EmbeddingSet(rows, cols, std::move(values)));
}

embedding::EstimatorConfig estimator(const std::string& mode, std::size_t budget, std::uint64_t seed,
                                     const std::string& aggregation) {
  embedding::EstimatorConfig c;
  if (mode == "exact") c.mode = embedding::EstimatorMode::kExact;
  else if (mode == "subsample") c.mode = embedding::EstimatorMode::kSubsample;
  else throw ConfigurationError("estimator must be exact or subsample");
  if (aggregation == "mean") c.aggregation = embedding::Aggregation::kMean;
  else if (aggregation == "geometric") c.aggregation = embedding::Aggregation::kGeometric;
  else throw ConfigurationError("aggregation must be mean or geometric");
  c.pair_budget = budget;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_fragscope, m) {
  m.doc() = "Native core of fragscope";

  static py::exception<Error> error(m, "FragscopeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object kind = py::int_(report::exit_code(e.kind()));
      PyErr_SetObject(error.ptr(), py::make_tuple(e.what(), kind).ptr());
    }
  });

  m.def("set_thread_count", &set_thread_count, py::arg("n"));
  m.def("thread_count", &thread_count);

  m.def("entropy", [](const std::vector<std::string>& symbols, const std::vector<double>& mass) {
    return factor::entropy(factor::DiscreteDistribution(symbols, mass));
  });
  m.def("mixture_summary", [](const std::string& doc) {
    return report::mixture_summary_json(mixture(doc)).dump();
  });
  m.def("verify_propositions",
        [](std::size_t trials, std::uint64_t seed, std::size_t max_support) {
          factor::VerificationConfig cfg;
          cfg.trials = trials;
          cfg.seed = seed;
          cfg.max_support = max_support;
          cfg.mode = factor::SupportMode::kDisjoint;
          const auto dis = factor::verify_propositions(cfg);
          cfg.mode = factor::SupportMode::kOverlapping;
          const auto over = factor::verify_propositions(cfg);
          return report::verification_json(dis, over).dump();
        },
        py::arg("trials") = 100, py::arg("seed") = 0, py::arg("max_support") = 8);

  m.def("apply_bridge",
        [](const std::string& doc, const std::string& which, const std::vector<std::string>& symbols, double eps) {
          return mixture_text(bridge::apply_bridge(mixture(doc), {factor::parse_factor(which), symbols, eps}));
        });
  m.def("symmetrize_factor", [](const std::string& doc, const std::string& which) {
    return mixture_text(bridge::symmetrize_factor(mixture(doc), factor::parse_factor(which)));
  });
  m.def("plan_bridge", [](const std::string& doc, const std::string& which,
                          const std::vector<std::string>& symbols, double target, const std::vector<double>& grid) {
    const bridge::BridgeSpec spec{factor::parse_factor(which), symbols, 0.0};
    return report::plan_json(bridge::plan_bridge(mixture(doc), spec, target, grid), spec).dump();
  });

  m.def("temperature_sweep",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> a, std::vector<std::string> labels,
           const std::vector<double>& temps, bool normalize, const std::string& mode, std::size_t budget,
           std::uint64_t seed, const std::string& aggregation) {
          const auto e = embeddings(a, normalize);
          const auto p = labels.empty() ? embedding::Partition::single(e.rows())
                                        : embedding::Partition(std::move(labels));
          const auto cfg = estimator(mode, budget, seed, aggregation);
          embedding::MetricReport r;
          {
            py::gil_scoped_release release;
            r = embedding::temperature_sweep(e, p, temps, cfg);
          }
          return report::metrics_json(r).dump();
        });

  m.def("simulate_sweep", [](const std::string& config, const std::string& knob, std::vector<double> values,
                             double lambda, double delta) {
    const auto base = report::sim_config_from_json(json::parse(config));
    const auto k = sim::parse_knob(knob);
    if (values.empty()) values = sim::default_grid(k);
    std::vector<sim::SweepRow> rows;
    {
      py::gil_scoped_release release;
      rows = sim::sweep(base, k, values, lambda, delta);
    }
    return report::sweep_json(base, k, lambda, delta, rows).dump();
  });
  m.def("default_sim_config", [] { return report::sim_config_to_json(sim::SimConfig{}).dump(); });

  m.attr("DEFAULT_TEMPERATURES") = embedding::kDefaultTemperatures;
  m.attr("DEFAULT_LAMBDA") = sim::kDefaultLambda;
  m.attr("DEFAULT_DELTA") = sim::kDefaultDelta;
}
