#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "sondeharm/cli.hpp"
#include "sondeharm/config.hpp"
#include "sondeharm/error.hpp"
#include "sondeharm/io.hpp"
#include "sondeharm/kernel.hpp"
#include "sondeharm/pipeline.hpp"
#include "sondeharm/report.hpp"
#include "sondeharm/splines.hpp"
#include "sondeharm/synth.hpp"

namespace py = pybind11;
namespace sh = sondeharm;

namespace {

// Profile ordered ground to top from parallel sequences.
sh::Profile make_profile(const std::vector<double>& pressures, const std::vector<double>& values,
                         std::vector<double> uncertainties) {
  if (pressures.size() != values.size())
    throw sh::Error(sh::ErrorCode::InvalidProfile, "pressures and values differ in length");
  if (uncertainties.empty()) uncertainties.assign(pressures.size(), 1.0);
  if (uncertainties.size() != pressures.size())
    throw sh::Error(sh::ErrorCode::InvalidProfile, "uncertainties differ in length");
  std::vector<sh::Level> levels;
  for (std::size_t i = 0; i < pressures.size(); ++i) levels.push_back({pressures[i], values[i], uncertainties[i]});
  return sh::Profile(sh::Instrument::Raob, sh::Variable::Temperature, std::move(levels));
}

std::vector<double> weights_or_uniform(const std::vector<double>& weights, std::size_t n) {
  return weights.empty() ? std::vector<double>(n, 1.0) : weights;
}

sh::PipelineConfig config_from(const py::object& config) {
  if (config.is_none()) return sh::PipelineConfig{};
  if (py::isinstance<py::str>(config)) return sh::load_config(config.cast<std::string>());
  const std::string text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
  try {
    return sh::parse_config(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw sh::Error(sh::ErrorCode::ConfigError, e.what());
  }
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Radiosonde / satellite profile harmonization";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::exception<sh::Error>(m, "SondeharmError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sh::Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(sh::to_string(e.code()));
      exc.attr("exit_code") = sh::exit_code_for(e.code());
      py::set_error(type, exc);
    }
  });

  py::enum_<sh::SplineKind>(m, "SplineKind")
      .value("LinearB", sh::SplineKind::LinearB)
      .value("CubicB", sh::SplineKind::CubicB)
      .value("HermiteInterp", sh::SplineKind::HermiteInterp);

  py::class_<sh::SplineFit>(m, "SplineFit")
      .def_property_readonly("kind", &sh::SplineFit::kind)
      .def_property_readonly("lambda_", &sh::SplineFit::lambda)
      .def_property_readonly("tau", &sh::SplineFit::tau)
      .def_property_readonly("knot_pressures", &sh::SplineFit::knot_pressures)
      .def_property_readonly("coefficients",
                             [](const sh::SplineFit& f) {
                               return std::vector<double>(f.coefficients().begin(), f.coefficients().end());
                             })
      .def_property_readonly("p_min", &sh::SplineFit::p_min)
      .def_property_readonly("p_max", &sh::SplineFit::p_max)
      .def("__call__", py::overload_cast<double>(&sh::SplineFit::evaluate, py::const_), py::arg("p"))
      .def(
          "evaluate",
          [](const sh::SplineFit& f, const std::vector<double>& p) { return f.evaluate(std::span<const double>(p)); },
          py::arg("pressures"));

  m.def(
      "fit_penalized",
      [](const std::vector<double>& p, const std::vector<double>& v, const std::vector<double>& w,
         sh::SplineKind kind, double lambda) {
        return sh::fit_penalized(make_profile(p, v, {}), kind, lambda, weights_or_uniform(w, p.size()));
      },
      py::arg("pressures"), py::arg("values"), py::arg("weights") = std::vector<double>{},
      py::arg("kind") = sh::SplineKind::LinearB, py::arg("lam") = 0.0,
      "Penalized spline through a profile given ground to top.");
  m.def(
      "fit_for_tolerance",
      [](const std::vector<double>& p, const std::vector<double>& v, const std::vector<double>& w,
         sh::SplineKind kind, double tau) {
        return sh::fit_for_tolerance(make_profile(p, v, {}), kind, weights_or_uniform(w, p.size()), tau);
      },
      py::arg("pressures"), py::arg("values"), py::arg("weights") = std::vector<double>{},
      py::arg("kind") = sh::SplineKind::LinearB, py::arg("tau") = 0.0);
  m.def(
      "lambda_for_tolerance",
      [](const std::vector<double>& p, const std::vector<double>& v, const std::vector<double>& w,
         sh::SplineKind kind, double tau) {
        return sh::lambda_for_tolerance(make_profile(p, v, {}), kind, weights_or_uniform(w, p.size()), tau);
      },
      py::arg("pressures"), py::arg("values"), py::arg("weights") = std::vector<double>{},
      py::arg("kind") = sh::SplineKind::LinearB, py::arg("tau") = 0.0);
  m.def(
      "tolerance_criterion",
      [](const sh::SplineFit& fit, const std::vector<double>& p, const std::vector<double>& v,
         const std::vector<double>& w) {
        return sh::tolerance_criterion(fit, make_profile(p, v, {}), weights_or_uniform(w, p.size()));
      },
      py::arg("fit"), py::arg("pressures"), py::arg("values"), py::arg("weights") = std::vector<double>{});

  m.def(
      "gev_pdf", [](double q, double mu, double sigma, double xi) { return sh::gev_pdf(q, mu, {sigma, xi}); },
      py::arg("q"), py::arg("mu"), py::arg("sigma"), py::arg("xi"));
  m.def(
      "normalized_weight",
      [](double q, double p, double sigma, double xi, double bottom, double top) {
        return sh::normalized_weight(q, p, {sigma, xi}, {bottom, top});
      },
      py::arg("q"), py::arg("p"), py::arg("sigma"), py::arg("xi"), py::arg("bottom"), py::arg("top"));
  m.def(
      "kernel_rule",
      [](double p, double sigma, double xi, double bottom, double top) {
        const sh::KernelRule rule = sh::make_kernel_rule(p, {sigma, xi}, {bottom, top});
        return py::make_tuple(rule.nodes, rule.weights, rule.mass);
      },
      py::arg("p"), py::arg("sigma"), py::arg("xi"), py::arg("bottom"), py::arg("top"),
      "Quadrature nodes, weights and in-range mass of the kernel at level p.");
  m.def(
      "convolve",
      [](const sh::SplineFit& fit, double p, double sigma, double xi, double bottom, double top) {
        return sh::convolve(fit, p, {sigma, xi}, {bottom, top});
      },
      py::arg("fit"), py::arg("p"), py::arg("sigma"), py::arg("xi"), py::arg("bottom"), py::arg("top"));

  m.def("log_uniform_grid", &sh::log_uniform_grid, py::arg("bottom"), py::arg("top"), py::arg("n"));
  m.def("wmo_mandatory_levels", &sh::wmo_mandatory_levels);

  m.def(
      "default_config",
      [](const std::string& variable) {
        return to_python(sh::to_json(sh::default_pipeline_config(sh::parse_variable(variable))));
      },
      py::arg("variable") = "temperature", "Default configuration as a dict.");
  m.def(
      "simulate",
      [](const py::object& config, const std::filesystem::path& output) {
        const sh::PipelineConfig c = config_from(config);
        const sh::SynthConfig sc = sh::synth_config(c);
        const sh::SynthSet data = sh::generate_set(sc);
        sh::write_colocations(data.set, output);
        sh::write_file_atomic(output / "kernel_truth.csv", sh::kernel_truth_csv(sc.kernel_truth));
        return data.set.size();
      },
      py::arg("config"), py::arg("output"),
      "Write a synthetic co-location set (index.csv, profiles/, kernel_truth.csv).");
  m.def(
      "run",
      [](const py::object& config, const std::filesystem::path& input, const std::filesystem::path& output) {
        const sh::PipelineConfig c = config_from(config);
        const sh::LoadResult data = sh::load_colocations(input, c);
        const sh::PipelineResult r = sh::run_pipeline(data.set, c);
        const sh::ReportFormat formats[] = {sh::ReportFormat::Csv, sh::ReportFormat::Json, sh::ReportFormat::Svg};
        sh::emit_report(r, data.set, c, output, formats, &data.report);
        return to_python(sh::summary_json(r, c, &data.report));
      },
      py::arg("config"), py::arg("input"), py::arg("output"),
      "Full pipeline on a data set; writes every output and returns the summary.");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"sondeharm"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int rc = sh::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"), "Run the command line tool in-process; returns (exit_code, stdout, stderr).");
}
