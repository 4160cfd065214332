#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coact/adag.hpp"
#include "coact/cli.hpp"
#include "coact/errors.hpp"
#include "coact/estimation.hpp"
#include "coact/json_io.hpp"
#include "coact/mechanism.hpp"
#include "coact/simulator.hpp"

namespace py = pybind11;
using namespace coact;
using json = json_io::json;

// Structured values cross the boundary as JSON text; the Python side decodes.

namespace {

std::string classify(const std::string& response) {
  auto f = json_io::response_from_json(json::parse(response));
  json j;
  j["verdict"] = json_io::to_json(f, mechanism::classify_coaction(f));
  j["monotonicity"] = {
      {"A", mechanism::to_string(mechanism::check_monotonicity(f, mechanism::Factor::A))},
      {"B", mechanism::to_string(mechanism::check_monotonicity(f, mechanism::Factor::B))}};
  return j.dump();
}

std::string boolean_pattern(int id) { return json_io::to_json(mechanism::boolean_pattern(id)).dump(); }

bool d_separated(const std::string& graph, const adag::NodeSet& x, const adag::NodeSet& y,
                 const adag::NodeSet& z) {
  return adag::d_separated(json_io::adag_from_json(json::parse(graph)), x, y, z);
}

std::string check_conditions(const std::string& graph, const std::string& a, const std::string& b,
                             const std::string& y, const adag::NodeSet& c, const adag::NodeSet& u,
                             bool asserted_functional) {
  auto g = json_io::adag_from_json(json::parse(graph));
  adag::RoleAssignment roles{a, b, y, c, u, asserted_functional};
  json j;
  j["conditions"] = json_io::to_json(adag::check_core_conditions(g, roles));
  j["sufficient_covariate"] = json_io::to_json(adag::check_sufficient_covariate(g, roles, c));
  return j.dump();
}

estimation::Dataset cell_dataset(const std::vector<double>& alpha, const std::vector<double>& beta,
                                 const std::vector<double>& y,
                                 const std::optional<std::vector<double>>& trend) {
  using estimation::Column;
  using estimation::ColumnType;
  std::vector<Column> cols{{estimation::kAlphaColumn, ColumnType::binary, alpha},
                           {estimation::kBetaColumn, ColumnType::binary, beta}};
  if (trend) cols.push_back({"trend", ColumnType::continuous, *trend});
  cols.push_back({"Y", ColumnType::binary, y});
  return estimation::Dataset(std::move(cols), "Y");
}

std::string excess_risk(const std::vector<double>& alpha, const std::vector<double>& beta,
                        const std::vector<double>& y) {
  auto d = cell_dataset(alpha, beta, y, std::nullopt);
  auto table = estimation::estimate_risk_table(d);
  json j;
  j["risk_table"] = json_io::to_json(table);
  j["test"] = json_io::to_json(estimation::excess_risk_test(table));
  return j.dump();
}

std::string fit_model(const std::vector<double>& alpha, const std::vector<double>& beta,
                      const std::vector<double>& y, const std::string& link,
                      const std::optional<std::vector<double>>& trend, double t) {
  auto d = cell_dataset(alpha, beta, y, trend);
  auto formula = estimation::excess_risk_formula(trend ? std::optional<std::string>("trend")
                                                       : std::nullopt);
  json j;
  if (link == "risk") {
    auto fit = estimation::fit_linear_risk(d, formula);
    auto coding = estimation::standard_cell_coding(
        "(Intercept)", estimation::kAlphaColumn, estimation::kBetaColumn,
        std::string(estimation::kAlphaColumn) + ":" + estimation::kBetaColumn, formula.trend);
    j["fit"] = json_io::to_json(fit);
    j["test"] = json_io::to_json(estimation::model_excess_risk(fit, coding, t));
  } else if (link == "odds") {
    auto fit = estimation::fit_linear_odds(d, formula);
    auto coding = estimation::standard_cell_coding(
        "(Intercept)", estimation::kAlphaColumn, estimation::kBetaColumn,
        std::string(estimation::kAlphaColumn) + ":" + estimation::kBetaColumn, formula.trend);
    j["fit"] = json_io::to_json(fit);
    j["test"] = json_io::to_json(estimation::rare_disease_excess(fit, coding, t));
  } else {
    throw UsageError("link must be 'risk' or 'odds'");
  }
  return j.dump();
}

std::string exact_risk(const std::string& scenario) {
  auto j = json::parse(scenario);
  auto s = json_io::scenario_from_json(j);
  auto d = json_io::dichotomy_from_json(j);
  if (!d) throw UsageError("the scenario has no 'dichotomy'");
  return json_io::to_json(simulator::exact_risk(s, *d)).dump();
}

std::map<std::string, std::vector<double>> sample(const std::string& scenario, std::size_t n,
                                                  std::uint64_t seed, bool include_u) {
  auto s = json_io::scenario_from_json(json::parse(scenario));
  auto d = simulator::sample_dataset(s, n, seed, include_u);
  std::map<std::string, std::vector<double>> out;
  for (const auto& c : d.columns()) out[c.name] = c.values;
  return out;
}

std::string soundness(std::size_t trials, std::uint64_t seed, unsigned workers,
                      const std::string& blocks, double non_monotone_rate, double flip_rate) {
  simulator::GeneratorOptions opt;
  if (blocks == "singleton")
    opt.blocks = simulator::GeneratorOptions::Blocks::singleton;
  else if (blocks == "threshold")
    opt.blocks = simulator::GeneratorOptions::Blocks::threshold;
  else
    throw UsageError("blocks must be 'singleton' or 'threshold'");
  opt.non_monotone_rate = non_monotone_rate;
  opt.flip_rate = flip_rate;
  auto r = simulator::soundness_experiment(simulator::monotone_scenario_generator(opt), trials,
                                           seed, workers);
  return json_io::to_json(r).dump();
}

py::tuple run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "coact");
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coaction analysis: mechanisms, augmented DAGs, excess-risk estimation, simulation";

  auto base = py::register_exception<Error>(m, "CoactError", PyExc_RuntimeError);
  auto usage = py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", usage.ptr());
  auto analysis = py::register_exception<AnalysisError>(m, "AnalysisError", base.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", analysis.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", analysis.ptr());
  py::register_exception<FitError>(m, "FitError", analysis.ptr());
  py::register_exception<BootstrapError>(m, "BootstrapError", analysis.ptr());
  // Register the leaves first so pybind11 tries them before their bases.

  m.def("classify", &classify, py::arg("response"));
  m.def("boolean_pattern", &boolean_pattern, py::arg("id"));
  m.def("d_separated", &d_separated, py::arg("graph"), py::arg("x"), py::arg("y"),
        py::arg("z") = adag::NodeSet{});
  m.def("check_conditions", &check_conditions, py::arg("graph"), py::arg("a") = "A",
        py::arg("b") = "B", py::arg("y") = "Y", py::arg("c") = adag::NodeSet{},
        py::arg("u") = adag::NodeSet{}, py::arg("asserted_functional") = false);
  m.def("excess_risk", &excess_risk, py::arg("alpha"), py::arg("beta"), py::arg("y"));
  m.def("fit_model", &fit_model, py::arg("alpha"), py::arg("beta"), py::arg("y"),
        py::arg("link") = "risk", py::arg("trend") = py::none(), py::arg("t") = 0.0);
  m.def("exact_risk", &exact_risk, py::arg("scenario"));
  m.def("sample", &sample, py::arg("scenario"), py::arg("n"), py::arg("seed") = 0,
        py::arg("include_u") = false);
  m.def("soundness", &soundness, py::arg("trials"), py::arg("seed") = 0, py::arg("workers") = 1,
        py::arg("blocks") = "singleton", py::arg("non_monotone_rate") = 0.0,
        py::arg("flip_rate") = 0.0, py::call_guard<py::gil_scoped_release>());
  m.def("run_cli", &run_cli, py::arg("args"));
}
