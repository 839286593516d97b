#include <doctest.h>

#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sondeharm/cli.hpp"
#include "sondeharm/config.hpp"
#include "sondeharm/error.hpp"
#include "sondeharm/io.hpp"
#include "sondeharm/pipeline.hpp"
#include "sondeharm/report.hpp"
#include "sondeharm/synth.hpp"

using namespace sondeharm;
namespace fs = std::filesystem;

namespace {

constexpr ReportFormat kAllFormats[] = {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg};

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sondeharm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig small_config(int pairs, int gruan_pairs) {
  PipelineConfig c = default_pipeline_config(Variable::Temperature);
  c.seed = 5;
  c.restarts = 4;
  c.synth.pairs = pairs;
  c.synth.gruan_pairs = gruan_pairs;
  c.synth.iasi_levels = 10;
  return c;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"sondeharm"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("pipeline without GRUAN needs a fixed tau") {
  PipelineConfig c = small_config(6, 0);
  const ColocationSet set = generate_set(synth_config(c)).set;
  try {
    run_pipeline(set, c);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  c.tau = 0.0;
  const PipelineResult r = run_pipeline(set, c, Stage::Fit);
  CHECK(!r.calibration.has_value());
  CHECK(r.fits.size() == 6);
  CHECK(!r.harmonization.has_value());
  for (double d : r.bias.delta) CHECK(d == 0.0);
}

TEST_CASE("stage errors keep their code and name the stage") {
  PipelineConfig c = small_config(4, 0);
  c.tau = 0.0;
  ColocationSet set = generate_set(synth_config(c)).set;
  set.iasi_grid.pop_back();
  try {
    run_pipeline(set, c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(exit_code_for(e.code()) == 2);
  }
}

TEST_CASE("stages stop where asked") {
  const PipelineConfig c = small_config(8, 4);
  const ColocationSet set = generate_set(synth_config(c)).set;
  const PipelineResult cal = run_pipeline(set, c, Stage::Calibrate);
  REQUIRE(cal.calibration.has_value());
  CHECK(cal.calibration->tau.has_value());
  CHECK(cal.fits.empty());
  CHECK(cal.uncertainties().size() == 3);

  const PipelineResult full = run_pipeline(set, c);
  CHECK(full.tau_used == cal.calibration->tau->tau_hat);
  CHECK(full.uncertainties().size() == 6);
  REQUIRE(full.harmonization.has_value());
  CHECK(full.harmonization->kernels.iasi_grid == set.iasi_grid);
}

TEST_CASE("report files: names, headers, and byte-identical reruns") {
  const PipelineConfig c = small_config(8, 4);
  const ColocationSet set = generate_set(synth_config(c)).set;
  const FileMap a = render_report(run_pipeline(set, c), set, c, kAllFormats);
  const FileMap b = render_report(run_pipeline(set, c), set, c, kAllFormats);
  CHECK(a == b);

  const std::map<std::string, std::string> headers{
      {"tau_curve.csv", "tau,weighted_rmse"},
      {"bias.csv", "pressure_hpa,delta"},
      {"kernels.csv", "pressure_hpa,sigma_hpa,xi,misfit,penalty,objective,weighted_sse,border"},
      {"smoothed.csv", "pair_id,pressure_hpa,smoothed_value,iasi_value"},
      {"fits.csv", "pair_id,spline_kind,lambda,tau,pressure_hpa,fitted_value"},
      {"uncertainty_rg_total.csv", "pressure_hpa,value,clamped"},
      {"uncertainty_rg_processing.csv", "pressure_hpa,value,clamped"},
      {"uncertainty_r_sparseness.csv", "pressure_hpa,value,clamped"},
      {"uncertainty_ri_raw.csv", "pressure_hpa,value,clamped"},
      {"uncertainty_ri_harmonized.csv", "pressure_hpa,value,clamped"},
      {"uncertainty_ri_vsmooth.csv", "pressure_hpa,value,clamped"},
  };
  for (const auto& [name, header] : headers) {
    INFO(name);
    REQUIRE(a.count(name) == 1);
    CHECK(first_line(a.at(name)) == header);
  }
  for (const char* svg : {"uncertainty_profiles.svg", "kernel_fan.svg", "tau_curve.svg"}) {
    INFO(svg);
    REQUIRE(a.count(svg) == 1);
    CHECK(a.at(svg).find("<svg") != std::string::npos);
    CHECK(a.at(svg).find("nan") == std::string::npos);
    CHECK(a.at(svg).rfind("</svg>\n") == a.at(svg).size() - 7);
  }
  const auto summary = nlohmann::json::parse(a.at("summary.json"));
  CHECK(summary.at("pairs") == 8);
  CHECK(summary.at("gruan_pairs") == 4);
  CHECK(summary.at("tau_hat").is_number());

  // The plots rebuilt from the written tables match the in-memory ones.
  const fs::path dir = fresh_dir("report");
  write_files(dir, a);
  const FileMap svgs = render_svgs(read_report_tables(dir));
  REQUIRE(svgs.size() == 3);
  for (const auto& [name, content] : svgs) CHECK(content == a.at(name));
}

TEST_CASE("an empty bundle writes nothing") {
  const fs::path dir = fresh_dir("empty") / "out";
  try {
    write_files(dir, {});
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  CHECK(!fs::exists(dir));
}

TEST_CASE("harmonization closes most of the raw mismatch on synthetic data") {
  PipelineConfig c = small_config(40, 10);
  c.synth.family = TruthFamily::PiecewiseLinearKinks;
  c.synth.iasi_noise_sd = 0.0;
  c.tau = 0.0;
  const ColocationSet set = generate_set(synth_config(c)).set;
  const PipelineResult r = run_pipeline(set, c);
  REQUIRE(r.u_raw.has_value());
  REQUIRE(r.u_harm.has_value());
  CHECK(r.u_harm->profile_average < 0.1 * r.u_raw->profile_average);
}

TEST_CASE("command line: exit codes and outputs") {
  const fs::path dir = fresh_dir("cli");
  const std::string cfg = (dir / "cfg.json").string();
  write_file_atomic(cfg, R"({"restarts": 3, "synth": {"pairs": 8, "gruan_pairs": 4, "iasi_levels": 10}})");
  const std::string data = (dir / "data").string();
  const std::string out = (dir / "out").string();

  std::string text, err;
  CHECK(cli({}, &text, &err) == 1);
  CHECK(cli({"frobnicate"}) == 1);
  CHECK(cli({"run", "--seed", "x"}) == 1);
  CHECK(cli({"run", "--config", (dir / "absent.json").string()}) == 1);
  CHECK(cli({"run", "--config", cfg}) == 1);  // no input configured
  CHECK(cli({"run", "--config", cfg, "--input", (dir / "nowhere").string()}) == 2);
  CHECK(cli({"--help"}, &text) == 0);
  CHECK(text.find("calibrate-tau") != std::string::npos);

  REQUIRE(cli({"simulate", "--config", cfg, "--output", data}) == 0);
  CHECK(fs::exists(fs::path(data) / "index.csv"));
  CHECK(fs::exists(fs::path(data) / "kernel_truth.csv"));

  REQUIRE(cli({"run", "--config", cfg, "--input", data, "--output", out}, &text, &err) == 0);
  CHECK(err.find("tau_hat") != std::string::npos);
  for (const char* f : {"summary.json", "kernels.csv", "fits.csv", "uncertainty_ri_harmonized.csv", "kernel_fan.svg"})
    CHECK(fs::exists(fs::path(out) / f));
  const std::string kernels = read_file(fs::path(out) / "kernels.csv");

  fs::remove(fs::path(out) / "kernel_fan.svg");
  CHECK(cli({"report", "--config", cfg, "--output", out}) == 0);
  CHECK(fs::exists(fs::path(out) / "kernel_fan.svg"));

  const std::string out2 = (dir / "out2").string();
  CHECK(cli({"harmonize", "--config", cfg, "--input", data, "--output", out2}) == 0);
  CHECK(read_file(fs::path(out2) / "kernels.csv") == kernels);
  CHECK(!fs::exists(fs::path(out2) / "fits.csv"));

  const std::string data3 = (dir / "data3").string();
  CHECK(cli({"simulate", "--config", cfg, "--seed", "77", "--output", data3}) == 0);
  CHECK(read_file(fs::path(data3) / "profiles" / "P00000_raob.csv") !=
        read_file(fs::path(data) / "profiles" / "P00000_raob.csv"));
}
