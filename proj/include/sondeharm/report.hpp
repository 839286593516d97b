#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sondeharm/io.hpp"
#include "sondeharm/pipeline.hpp"

namespace sondeharm {

enum class ReportFormat { Csv, Json, Svg };

/// File name -> content, rendered fully before anything is written.
using FileMap = std::map<std::string, std::string>;

struct KernelRow {
  double pressure = 0.0;
  GevParams params;
  double misfit = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  double weighted_sse = 0.0;
  bool border = false;
};

/// What the plots need; built from a result or read back from CSV outputs.
struct ReportTables {
  PressureRange range;
  std::string variable;
  std::vector<std::pair<double, double>> tau_curve;
  std::optional<double> tau_hat;
  std::vector<KernelRow> kernels;
  std::vector<UncertaintyProfile> uncertainties;
};

ReportTables report_tables(const PipelineResult& result);
/// Reads summary.json, tau_curve.csv, kernels.csv and uncertainty_*.csv
/// from `dir`; missing optional tables are left empty.
ReportTables read_report_tables(const std::filesystem::path& dir);

std::string tau_curve_csv(const TauCalibration& tau);
std::string bias_csv(const BiasProfile& bias);
std::string kernels_csv(const HarmonizationResult& result);
std::string uncertainty_csv(const UncertaintyProfile& u);
std::string smoothed_csv(const HarmonizationResult& result, const ColocationSet& set);
std::string fits_csv(const std::vector<SplineFit>& fits, const ColocationSet& set);
std::string kernel_truth_csv(const KernelProfile& kernels);
nlohmann::json summary_json(const PipelineResult& result, const PipelineConfig& config, const LoadReport* load);

std::string uncertainty_svg(const ReportTables& tables);
std::string kernel_fan_svg(const ReportTables& tables);
std::string tau_curve_svg(const ReportTables& tables);

/// Every table of `result` in the requested formats.
FileMap render_report(const PipelineResult& result, const ColocationSet& set, const PipelineConfig& config,
                      std::span<const ReportFormat> formats, const LoadReport* load = nullptr);
FileMap render_svgs(const ReportTables& tables);

/// Writes every file atomically; IoError (and nothing written) when empty.
void write_files(const std::filesystem::path& dir, const FileMap& files);

/// render_report + write_files. Returns the written file names.
std::vector<std::string> emit_report(const PipelineResult& result, const ColocationSet& set,
                                     const PipelineConfig& config, const std::filesystem::path& dir,
                                     std::span<const ReportFormat> formats, const LoadReport* load = nullptr);

}  // namespace sondeharm
