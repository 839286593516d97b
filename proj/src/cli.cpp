#include "sondeharm/cli.hpp"

#include <CLI11.hpp>

#include <functional>
#include <optional>
#include <string>

#include "sondeharm/config.hpp"
#include "sondeharm/error.hpp"
#include "sondeharm/io.hpp"
#include "sondeharm/pipeline.hpp"
#include "sondeharm/report.hpp"
#include "sondeharm/synth.hpp"

namespace sondeharm {

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string input;
  std::string output;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON configuration file");
  cmd->add_option("--seed", a.seed, "Random seed (overrides the config)");
  cmd->add_option("--input", a.input, "Index file or data directory (overrides paths.input)");
  cmd->add_option("--output", a.output, "Output directory (overrides paths.output)");
}

PipelineConfig resolve_config(const CommonArgs& a) {
  PipelineConfig c = a.config.empty() ? PipelineConfig{} : load_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (!a.input.empty()) c.input = a.input;
  if (!a.output.empty()) c.output = a.output;
  validate(c);
  return c;
}


LoadResult load_input(const PipelineConfig& c, std::ostream& err) {
  if (c.input.empty()) throw Error(ErrorCode::ConfigError, "no input given (paths.input or --input)");
  LoadResult r = load_colocations(c.input, c);
  const LoadReport& rep = r.report;
  err << "loaded " << rep.kept << " of " << rep.total << " co-locations (dropped: " << rep.dropped_window
      << " outside window, " << rep.dropped_raob_levels << " too few RAOB levels, " << rep.dropped_iasi
      << " without IASI levels; " << rep.gruan_kept << " with GRUAN)\n";
  return r;
}

void warn_clamped(const PipelineResult& r, std::ostream& err) {
  for (const UncertaintyProfile& u : r.uncertainties()) {
    const auto n = std::count(u.clamped.begin(), u.clamped.end(), true);
    if (n > 0)
      err << "warning: " << to_string(u.component) << " clamped a negative quadratic difference at " << n
          << " level(s)\n";
  }
}

FileMap select(FileMap files, const std::function<bool(const std::string&)>& keep) {
  for (auto it = files.begin(); it != files.end();) it = keep(it->first) ? std::next(it) : files.erase(it);
  return files;
}

void write_and_list(const fs::path& dir, const FileMap& files, std::ostream& out) {
  write_files(dir, files);
  for (const auto& [name, content] : files) out << "wrote " << (dir / name).string() << "\n";
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

int simulate(const PipelineConfig& c, std::ostream& out) {
  const SynthSet data = generate_set(synth_config(c));
  const fs::path dir = c.output;
  write_colocations(data.set, dir);
  write_file_atomic(dir / "kernel_truth.csv", kernel_truth_csv(synth_config(c).kernel_truth));
  out << "wrote " << data.set.size() << " co-locations to " << dir.string() << "\n";
  return 0;
}

int staged_command(const PipelineConfig& c, Stage until, const std::function<bool(const std::string&)>& keep,
                   std::ostream& out, std::ostream& err) {
  const LoadResult data = load_input(c, err);
  if (until == Stage::Calibrate && data.report.gruan_kept == 0)
    throw Error(ErrorCode::NoGruan, "calibrate-tau needs co-locations with a GRUAN sounding");
  PipelineConfig run = c;
  if (until == Stage::Calibrate) run.tau.reset();
  const PipelineResult r = run_pipeline(data.set, run, until);
  if (r.calibration && r.calibration->tau)
    err << "tau_hat = " << format_double(r.calibration->tau->tau_hat) << "\n";
  warn_clamped(r, err);
  const ReportFormat formats[] = {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg};
  write_and_list(c.output, select(render_report(r, data.set, run, formats, &data.report), keep), out);
  return 0;
}

int report(const PipelineConfig& c, std::ostream& out) {
  const ReportTables tables = read_report_tables(c.output);
  write_and_list(c.output, render_svgs(tables), out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sonde profile harmonization: splines, GEV kernels and uncertainty budgets", "sondeharm"};
  app.require_subcommand(1);
  CommonArgs args;
  std::function<int(const PipelineConfig&)> action;

  auto* sim = app.add_subcommand("simulate", "Write a synthetic co-location data set");
  add_common(sim, args);
  sim->callback([&] { action = [&](const PipelineConfig& c) { return simulate(c, out); }; });

  auto* fit = app.add_subcommand("fit", "Fit the RAOB splines (fits.csv)");
  add_common(fit, args);
  fit->callback([&] {
    action = [&](const PipelineConfig& c) {
      return staged_command(c, Stage::Fit, [](const std::string& n) { return n == "fits.csv"; }, out, err);
    };
  });

  auto* cal = app.add_subcommand("calibrate-tau", "Calibrate the spline tolerance against GRUAN");
  add_common(cal, args);
  cal->callback([&] {
    action = [&](const PipelineConfig& c) {
      return staged_command(
          c, Stage::Calibrate,
          [](const std::string& n) {
            return n == "tau_curve.csv" || n == "bias.csv" || n == "tau_curve.svg" || starts_with(n, "uncertainty_r");
          },
          out, err);
    };
  });

  auto* harm = app.add_subcommand("harmonize", "Estimate the kernel profile");
  add_common(harm, args);
  harm->callback([&] {
    action = [&](const PipelineConfig& c) {
      return staged_command(
          c, Stage::Harmonize,
          [](const std::string& n) { return n == "kernels.csv" || n == "smoothed.csv" || n == "kernel_fan.svg"; }, out,
          err);
    };
  });

  auto* bud = app.add_subcommand("budget", "Compute every uncertainty component");
  add_common(bud, args);
  bud->callback([&] {
    action = [&](const PipelineConfig& c) {
      return staged_command(c, Stage::Budget, [](const std::string& n) { return starts_with(n, "uncertainty_"); }, out,
                            err);
    };
  });

  auto* rep = app.add_subcommand("report", "Render SVG plots from the CSV outputs");
  add_common(rep, args);
  rep->callback([&] { action = [&](const PipelineConfig& c) { return report(c, out); }; });

  auto* run = app.add_subcommand("run", "Full pipeline with every table, summary and plot");
  add_common(run, args);
  run->callback([&] {
    action = [&](const PipelineConfig& c) {
      return staged_command(c, Stage::Budget, [](const std::string&) { return true; }, out, err);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    return action(resolve_config(args));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace sondeharm
