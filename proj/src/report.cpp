#include "sondeharm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTauHeader = "tau,weighted_rmse";
constexpr std::string_view kBiasHeader = "pressure_hpa,delta";
constexpr std::string_view kKernelHeader = "pressure_hpa,sigma_hpa,xi,misfit,penalty,objective,weighted_sse,border";
constexpr std::string_view kUncertaintyHeader = "pressure_hpa,value,clamped";
constexpr std::string_view kSmoothedHeader = "pair_id,pressure_hpa,smoothed_value,iasi_value";
constexpr std::string_view kFitsHeader = "pair_id,spline_kind,lambda,tau,pressure_hpa,fitted_value";
constexpr std::string_view kTruthHeader = "pressure_hpa,sigma_hpa,xi";

std::string line(std::initializer_list<std::string> fields) {
  std::string out;
  for (const std::string& f : fields) {
    if (!out.empty()) out += ',';
    out += f;
  }
  out += '\n';
  return out;
}

std::string fixed(double x, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

// Linear or log x against a log-pressure y axis (ground at the bottom), or a
// plain linear y axis for non-profile plots.
class Plot {
 public:
  Plot(double x0, double x1, bool log_x, double y0, double y1, bool pressure_y)
      : x0_(x0), x1_(x1), log_x_(log_x), y0_(y0), y1_(y1), pressure_y_(pressure_y) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
  }

  double sx(double x) const {
    const double t = log_x_ ? (std::log(x) - std::log(x0_)) / (std::log(x1_) - std::log(x0_)) : (x - x0_) / (x1_ - x0_);
    return kLeft + t * (kWidth - kLeft - kRight);
  }
  double sy(double y) const {
    // Pressure axis: y0 = top (small p) drawn at the top of the panel.
    const double t = pressure_y_ ? (std::log(y) - std::log(y0_)) / (std::log(y1_) - std::log(y0_)) : (y1_ - y) / (y1_ - y0_);
    return kTop + t * (kHeight - kTop - kBottom);
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, bool dashed = false) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"";
    if (dashed) body_ += " stroke-dasharray=\"4 3\"";
    body_ += " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) body_ += ' ';
      body_ += fixed(sx(pts[i].first)) + "," + fixed(sy(pts[i].second));
    }
    body_ += "\"/>\n";
  }

  void vline(double x, const char* color) {
    body_ += "<line x1=\"" + fixed(sx(x)) + "\" y1=\"" + fixed(kTop) + "\" x2=\"" + fixed(sx(x)) + "\" y2=\"" +
             fixed(kHeight - kBottom) + "\" stroke=\"" + color + "\" stroke-dasharray=\"2 2\"/>\n";
  }

  void legend(std::size_t i, const std::string& label, const char* color) {
    const double y = kTop + 14.0 + 16.0 * static_cast<double>(i);
    const double x = kWidth - kRight - 150.0;
    body_ += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(y - 4) + "\" x2=\"" + fixed(x + 20) + "\" y2=\"" +
             fixed(y - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    body_ += "<text x=\"" + fixed(x + 26) + "\" y=\"" + fixed(y) + "\" font-size=\"11\">" + label + "</text>\n";
  }

  std::string render(const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
         "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " + fixed(kHeight, 0) + "\" font-family=\"sans-serif\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
    s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(kWidth - kLeft - kRight) +
         "\" height=\"" + fixed(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += ticks();
    s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"" + fixed(kHeight - 10) + "\" text-anchor=\"middle\" font-size=\"12\">" +
         xlabel + "</text>\n";
    s += "<text x=\"16\" y=\"" + fixed(kHeight / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fixed(kHeight / 2) + ")\">" + ylabel + "</text>\n";
    s += body_;
    s += "</svg>\n";
    return s;
  }

 private:
  std::string ticks() const {
    std::string s;
    auto tick_label = [](double v) { return std::abs(v) >= 100 || v == std::floor(v) ? fixed(v, 0) : fixed(v, 3); };
    std::vector<double> xt;
    if (log_x_) {
      for (double d = std::pow(10.0, std::floor(std::log10(x0_))); d <= x1_ * 1.0001; d *= 10.0)
        if (d >= x0_ * 0.9999) xt.push_back(d);
    } else {
      for (int i = 0; i <= 4; ++i) xt.push_back(x0_ + (x1_ - x0_) * i / 4.0);
    }
    for (double v : xt) {
      const double x = sx(v);
      s += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(kHeight - kBottom) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
           fixed(kHeight - kBottom + 5) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(kHeight - kBottom + 18) + "\" text-anchor=\"middle\" font-size=\"10\">" +
           tick_label(v) + "</text>\n";
    }
    std::vector<double> yt;
    if (pressure_y_) {
      for (double p : {1000.0, 850.0, 700.0, 500.0, 300.0, 200.0, 100.0, 50.0, 20.0, 10.0})
        if (p >= y0_ && p <= y1_) yt.push_back(p);
    } else {
      for (int i = 0; i <= 4; ++i) yt.push_back(y0_ + (y1_ - y0_) * i / 4.0);
    }
    for (double v : yt) {
      const double y = sy(v);
      s += "<line x1=\"" + fixed(kLeft - 5) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(kLeft) + "\" y2=\"" + fixed(y) +
           "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + fixed(y + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
           tick_label(v) + "</text>\n";
    }
    return s;
  }

  static constexpr double kWidth = 640.0;
  static constexpr double kHeight = 480.0;
  static constexpr double kLeft = 70.0;
  static constexpr double kRight = 20.0;
  static constexpr double kTop = 30.0;
  static constexpr double kBottom = 50.0;

  double x0_, x1_;
  bool log_x_;
  double y0_, y1_;
  bool pressure_y_;
  std::string body_;
};

std::string units(const std::string& variable) { return variable == "wvmr" ? "g/kg" : "K"; }

}  // namespace

ReportTables report_tables(const PipelineResult& r) {
  ReportTables t;
  t.range = r.range;
  t.variable = std::string(to_string(r.variable));
  if (r.calibration && r.calibration->tau) {
    t.tau_curve = r.calibration->tau->objective_curve;
    t.tau_hat = r.calibration->tau->tau_hat;
  }
  if (r.harmonization) {
    const HarmonizationResult& h = *r.harmonization;
    for (std::size_t j = 0; j < h.kernels.params.size(); ++j)
      t.kernels.push_back({h.kernels.iasi_grid[j], h.kernels.params[j], h.misfit_per_level[j], h.penalty_per_level[j],
                           h.objective_per_level[j], h.weighted_sse_per_level[j], static_cast<bool>(h.border[j])});
  }
  t.uncertainties = r.uncertainties();
  return t;
}

ReportTables read_report_tables(const fs::path& dir) {
  ReportTables t;
  const fs::path summary_path = dir / "summary.json";
  nlohmann::json summary;
  try {
    summary = nlohmann::json::parse(read_file(summary_path));
    t.variable = summary.at("variable").get<std::string>();
    const auto range = summary.at("pressure_range").get<std::vector<double>>();
    if (range.size() != 2) throw Error(ErrorCode::SchemaError, "pressure_range must have two entries");
    t.range = {range[0], range[1]};
    if (summary.contains("tau_hat") && summary.at("tau_hat").is_number()) t.tau_hat = summary.at("tau_hat").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, summary_path.string() + ": " + e.what());
  }
  auto num = [](const std::string& s, const fs::path& p) { return parse_double(s, p.string()); };
  if (const fs::path p = dir / "tau_curve.csv"; fs::exists(p))
    for (const auto& row : parse_csv_table(read_file(p), kTauHeader, p.string()))
      t.tau_curve.emplace_back(num(row[0], p), num(row[1], p));
  if (const fs::path p = dir / "kernels.csv"; fs::exists(p))
    for (const auto& row : parse_csv_table(read_file(p), kKernelHeader, p.string()))
      t.kernels.push_back({num(row[0], p), {num(row[1], p), num(row[2], p)}, num(row[3], p), num(row[4], p),
                           num(row[5], p), num(row[6], p), row[7] == "1"});
  for (UncertaintyComponent c : {UncertaintyComponent::RgTotal, UncertaintyComponent::RgProcessing,
                                 UncertaintyComponent::RSparseness, UncertaintyComponent::RiRaw,
                                 UncertaintyComponent::RiHarmonized, UncertaintyComponent::RiVsmooth}) {
    const fs::path p = dir / ("uncertainty_" + std::string(to_string(c)) + ".csv");
    if (!fs::exists(p)) continue;
    std::vector<double> grid, values;
    std::vector<bool> clamped;
    for (const auto& row : parse_csv_table(read_file(p), kUncertaintyHeader, p.string())) {
      grid.push_back(num(row[0], p));
      values.push_back(num(row[1], p));
      clamped.push_back(row[2] == "1");
    }
    t.uncertainties.push_back(make_uncertainty_profile(c, std::move(grid), std::move(values), std::move(clamped)));
  }
  return t;
}

std::string tau_curve_csv(const TauCalibration& tau) {
  std::string out(kTauHeader);
  out += '\n';
  for (const auto& [x, v] : tau.objective_curve) out += line({format_double(x), format_double(v)});
  return out;
}

std::string bias_csv(const BiasProfile& bias) {
  std::string out(kBiasHeader);
  out += '\n';
  for (std::size_t i = 0; i < bias.grid.size(); ++i) out += line({format_double(bias.grid[i]), format_double(bias.delta[i])});
  return out;
}

std::string kernels_csv(const HarmonizationResult& h) {
  std::string out(kKernelHeader);
  out += '\n';
  for (std::size_t j = 0; j < h.kernels.params.size(); ++j)
    out += line({format_double(h.kernels.iasi_grid[j]), format_double(h.kernels.params[j].sigma),
                 format_double(h.kernels.params[j].xi), format_double(h.misfit_per_level[j]),
                 format_double(h.penalty_per_level[j]), format_double(h.objective_per_level[j]),
                 format_double(h.weighted_sse_per_level[j]), h.border[j] ? "1" : "0"});
  return out;
}

std::string uncertainty_csv(const UncertaintyProfile& u) {
  std::string out(kUncertaintyHeader);
  out += '\n';
  for (std::size_t i = 0; i < u.grid.size(); ++i)
    out += line({format_double(u.grid[i]), format_double(u.values[i]),
                 (i < u.clamped.size() && u.clamped[i]) ? "1" : "0"});
  return out;
}

std::string smoothed_csv(const HarmonizationResult& h, const ColocationSet& set) {
  std::string out(kSmoothedHeader);
  out += '\n';
  for (std::size_t k = 0; k < h.smoothed_profiles.size(); ++k)
    for (std::size_t j = 0; j < h.kernels.iasi_grid.size(); ++j)
      out += line({set.pairs[k].pair_id, format_double(h.kernels.iasi_grid[j]), format_double(h.smoothed_profiles[k][j]),
                   format_double(set.pairs[k].iasi[j].value)});
  return out;
}

std::string fits_csv(const std::vector<SplineFit>& fits, const ColocationSet& set) {
  std::string out(kFitsHeader);
  out += '\n';
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const SplineFit& f = fits[k];
    const std::vector<double> knots = f.knot_pressures();
    // Ground to top, like the soundings.
    for (auto it = knots.rbegin(); it != knots.rend(); ++it)
      out += line({set.pairs[k].pair_id, std::string(to_string(f.kind())), format_double(f.lambda()),
                   format_double(f.tau()), format_double(*it), format_double(f.evaluate(*it))});
  }
  return out;
}

std::string kernel_truth_csv(const KernelProfile& kernels) {
  std::string out(kTruthHeader);
  out += '\n';
  for (std::size_t j = 0; j < kernels.params.size(); ++j)
    out += line({format_double(kernels.iasi_grid[j]), format_double(kernels.params[j].sigma),
                 format_double(kernels.params[j].xi)});
  return out;
}

nlohmann::json summary_json(const PipelineResult& r, const PipelineConfig& config, const LoadReport* load) {
  nlohmann::json j;
  j["variable"] = std::string(to_string(r.variable));
  j["pressure_range"] = {r.range.bottom, r.range.top};
  j["pairs"] = r.pairs;
  j["gruan_pairs"] = r.gruan_pairs;
  j["spline_kind"] = std::string(to_string(r.spline_kind));
  j["tau_used"] = r.tau_used;
  j["seed"] = config.seed;
  if (r.calibration && r.calibration->tau) {
    j["tau_hat"] = r.calibration->tau->tau_hat;
    j["tau_objective"] = r.calibration->tau->objective_at_tau_hat;
    j["flat_objective"] = r.calibration->tau->flat_objective;
  } else {
    j["tau_hat"] = nullptr;
  }
  if (r.harmonization) {
    const HarmonizationResult& h = *r.harmonization;
    j["sigma_zeta"] = {h.kernels.sigma_zeta[0], h.kernels.sigma_zeta[1]};
    j["restarts_used"] = h.restarts_used;
    j["iteration_direction"] = std::string(to_string(h.direction));
    std::vector<double> border;
    for (std::size_t i = 0; i < h.border.size(); ++i)
      if (h.border[i]) border.push_back(h.kernels.iasi_grid[i]);
    j["border_levels_hpa"] = border;
  }
  nlohmann::json averages = nlohmann::json::object();
  nlohmann::json clamped = nlohmann::json::object();
  for (const UncertaintyProfile& u : r.uncertainties()) {
    averages[std::string(to_string(u.component))] = u.profile_average;
    const auto n = std::count(u.clamped.begin(), u.clamped.end(), true);
    if (n > 0) clamped[std::string(to_string(u.component))] = n;
  }
  j["profile_averages"] = averages;
  j["clamped_levels"] = clamped;
  if (load)
    j["load"] = {{"total", load->total},
                 {"kept", load->kept},
                 {"dropped_window", load->dropped_window},
                 {"dropped_raob_levels", load->dropped_raob_levels},
                 {"dropped_iasi", load->dropped_iasi},
                 {"gruan_kept", load->gruan_kept}};
  return j;
}

std::string uncertainty_svg(const ReportTables& t) {
  double vmax = 0.0;
  for (const UncertaintyProfile& u : t.uncertainties)
    for (double v : u.values) vmax = std::max(vmax, v);
  Plot plot(0.0, vmax > 0.0 ? 1.05 * vmax : 1.0, false, t.range.top, t.range.bottom, true);
  std::size_t i = 0;
  for (const UncertaintyProfile& u : t.uncertainties) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < u.grid.size(); ++k) pts.emplace_back(u.values[k], u.grid[k]);
    const char* color = kPalette[i % std::size(kPalette)];
    plot.polyline(pts, color);
    plot.legend(i, std::string(to_string(u.component)) + " (avg " + fixed(u.profile_average, 3) + ")", color);
    ++i;
  }
  return plot.render("Uncertainty profiles", "uncertainty [" + units(t.variable) + "]", "pressure [hPa]");
}

std::string kernel_fan_svg(const ReportTables& t) {
  constexpr int kSamples = 240;
  std::vector<std::vector<std::pair<double, double>>> curves;
  double wmax = 0.0;
  for (const KernelRow& k : t.kernels) {
    std::vector<std::pair<double, double>> pts;
    try {
      for (int i = 0; i <= kSamples; ++i) {
        const double q = t.range.top * std::pow(t.range.bottom / t.range.top, static_cast<double>(i) / kSamples);
        const double w = normalized_weight(q, k.pressure, k.params, t.range);
        pts.emplace_back(w, q);
        wmax = std::max(wmax, w);
      }
    } catch (const Error&) {
      pts.clear();
    }
    curves.push_back(std::move(pts));
  }
  Plot plot(0.0, wmax > 0.0 ? 1.05 * wmax : 1.0, false, t.range.top, t.range.bottom, true);
  for (std::size_t j = 0; j < curves.size(); ++j)
    plot.polyline(curves[j], kPalette[j % std::size(kPalette)], t.kernels[j].border);
  return plot.render("Harmonization kernels", "weight [1/hPa]", "pressure [hPa]");
}

std::string tau_curve_svg(const ReportTables& t) {
  double lo = 0.0, hi = 0.0, vmin = 0.0, vmax = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, v] : t.tau_curve) {
    if (!(x > 0.0)) continue;
    if (pts.empty()) {
      lo = hi = x;
      vmin = vmax = v;
    }
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    pts.emplace_back(x, v);
  }
  if (pts.empty()) {
    lo = 1e-3;
    hi = 10.0;
    vmax = 1.0;
  }
  std::sort(pts.begin(), pts.end());
  Plot plot(lo, hi, true, vmin, vmax > vmin ? vmax : vmin + 1.0, false);
  plot.polyline(pts, kPalette[0]);
  if (t.tau_hat && *t.tau_hat >= lo && *t.tau_hat <= hi) plot.vline(*t.tau_hat, kPalette[1]);
  return plot.render("Tolerance calibration", "tau [" + units(t.variable) + "]", "weighted RMSE [" + units(t.variable) + "]");
}

FileMap render_svgs(const ReportTables& t) {
  FileMap files;
  if (!t.uncertainties.empty()) files["uncertainty_profiles.svg"] = uncertainty_svg(t);
  if (!t.kernels.empty()) files["kernel_fan.svg"] = kernel_fan_svg(t);
  if (!t.tau_curve.empty()) files["tau_curve.svg"] = tau_curve_svg(t);
  return files;
}

FileMap render_report(const PipelineResult& r, const ColocationSet& set, const PipelineConfig& config,
                      std::span<const ReportFormat> formats, const LoadReport* load) {
  const bool empty = !r.calibration && r.fits.empty() && !r.harmonization && r.uncertainties().empty();
  if (empty) throw Error(ErrorCode::IoError, "nothing to report");
  auto wants = [&](ReportFormat f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  FileMap files;
  if (wants(ReportFormat::Csv)) {
    if (r.calibration) {
      if (r.calibration->tau) files["tau_curve.csv"] = tau_curve_csv(*r.calibration->tau);
      files["bias.csv"] = bias_csv(r.calibration->bias);
    }
    if (!r.fits.empty()) files["fits.csv"] = fits_csv(r.fits, set);
    if (r.harmonization) {
      files["kernels.csv"] = kernels_csv(*r.harmonization);
      files["smoothed.csv"] = smoothed_csv(*r.harmonization, set);
    }
    for (const UncertaintyProfile& u : r.uncertainties())
      files["uncertainty_" + std::string(to_string(u.component)) + ".csv"] = uncertainty_csv(u);
  }
  if (wants(ReportFormat::Json)) files["summary.json"] = summary_json(r, config, load).dump(2) + "\n";
  if (wants(ReportFormat::Svg))
    for (auto& [name, content] : render_svgs(report_tables(r))) files[name] = std::move(content);
  return files;
}

void write_files(const fs::path& dir, const FileMap& files) {
  if (files.empty()) throw Error(ErrorCode::IoError, "nothing to write to " + dir.string());
  for (const auto& [name, content] : files) write_file_atomic(dir / name, content);
}

std::vector<std::string> emit_report(const PipelineResult& result, const ColocationSet& set,
                                     const PipelineConfig& config, const fs::path& dir,
                                     std::span<const ReportFormat> formats, const LoadReport* load) {
  const FileMap files = render_report(result, set, config, formats, load);
  write_files(dir, files);
  std::vector<std::string> names;
  for (const auto& [name, content] : files) names.push_back(name);
  return names;
}

}  // namespace sondeharm
