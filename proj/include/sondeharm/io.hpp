#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sondeharm/config.hpp"
#include "sondeharm/core.hpp"

namespace sondeharm {

inline constexpr std::string_view kProfileHeader =
    "station_id,timestamp,variable,pressure_hpa,value,uncertainty,flag";
inline constexpr std::string_view kIndexHeader = "pair_id,raob_file,iasi_file,gruan_file,distance_km,delay_h";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
/// Whole-field decimal parse; throws ParseError naming `where`.
double parse_double(std::string_view text, const std::string& where);

/// Rows of a simple comma-separated table after checking its header line.
/// Throws SchemaError on a header mismatch, ParseError on a wrong field count.
std::vector<std::vector<std::string>> parse_csv_table(std::string_view text, std::string_view header,
                                                      const std::string& source);

/// Profile CSV: one sounding per file. Rows of other variables are ignored
/// when `variable` is given. Throws ParseError (with line number) and
/// SchemaError (header, mixed soundings, no rows, invalid ordering).
Profile parse_profile_csv(std::string_view text, Instrument instrument, std::optional<Variable> variable,
                          const std::string& source);
Profile read_profile_csv(const std::filesystem::path& path, Instrument instrument,
                         std::optional<Variable> variable = std::nullopt);
std::string profile_csv(const Profile& profile);

struct IndexRow {
  std::string pair_id;
  std::string raob_file;
  std::string iasi_file;
  std::string gruan_file;  // empty when the pair has no GRUAN sounding
  double distance_km = 0.0;
  double delay_h = 0.0;
};
std::vector<IndexRow> parse_index_csv(std::string_view text, const std::string& source);
std::string index_csv(const std::vector<IndexRow>& rows);

struct LoadReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t dropped_window = 0;      // distance or delay outside the window
  std::size_t dropped_raob_levels = 0; // fewer RAOB levels than required in range
  std::size_t dropped_iasi = 0;        // no IASI level in range
  std::size_t gruan_kept = 0;
};

struct LoadResult {
  ColocationSet set;
  LoadReport report;
};

/// Co-location set behind an index file (paths relative to it), filtered
/// to the configured variable, pressure range and minimum RAOB level count.
/// `input` may name the index file or a directory holding index.csv.
/// Throws SchemaError when kept pairs disagree on the IASI grid and
/// EmptyAfterFilter when nothing survives.
LoadResult load_colocations(const std::filesystem::path& input, const PipelineConfig& config);

/// Writes index.csv plus one CSV per sounding under `dir`.
void write_colocations(const ColocationSet& set, const std::filesystem::path& dir);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace sondeharm
