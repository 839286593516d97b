#include "sondeharm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Lines without the trailing CR/LF; blank lines are kept so numbering stays exact.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line); }

void check_text_field(std::string_view s, const char* name) {
  if (s.find_first_of(",\n\r\"") != std::string_view::npos)
    throw Error(ErrorCode::SchemaError, std::string(name) + " may not contain commas, quotes or line breaks");
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& where_) {
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::ParseError, where_ + ": not a number: '" + std::string(text) + "'");
  return x;
}

std::vector<std::vector<std::string>> parse_csv_table(std::string_view text, std::string_view header,
                                                      const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != header)
    throw Error(ErrorCode::SchemaError, source + ": expected header '" + std::string(header) + "'");
  const std::size_t n = split_fields(header).size();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != n)
      throw Error(ErrorCode::ParseError, where(source, i + 1) + ": expected " + std::to_string(n) + " fields, found " +
                                             std::to_string(f.size()));
    rows.emplace_back(f.begin(), f.end());
  }
  return rows;
}

Profile parse_profile_csv(std::string_view text, Instrument instrument, std::optional<Variable> variable,
                          const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kProfileHeader)
    throw Error(ErrorCode::SchemaError, source + ": expected header '" + std::string(kProfileHeader) + "'");
  std::vector<Level> levels;
  std::optional<Variable> seen_variable;
  std::string station, timestamp;
  bool first = true;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string at = where(source, i + 1);
    const auto f = split_fields(lines[i]);
    if (f.size() != 7) throw Error(ErrorCode::ParseError, at + ": expected 7 fields, found " + std::to_string(f.size()));
    Variable v;
    try {
      v = parse_variable(f[2]);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, at + ": " + e.message());
    }
    if (variable && v != *variable) continue;
    if (seen_variable && v != *seen_variable)
      throw Error(ErrorCode::SchemaError, at + ": several variables in one profile file");
    seen_variable = v;
    if (first) {
      station = std::string(f[0]);
      timestamp = std::string(f[1]);
      first = false;
    } else if (f[0] != station || f[1] != timestamp) {
      throw Error(ErrorCode::SchemaError, at + ": more than one sounding in a profile file");
    }
    Level level;
    level.pressure = parse_double(f[3], at);
    level.value = parse_double(f[4], at);
    level.uncertainty = parse_double(f[5], at);
    try {
      level.flag = parse_level_flag(f[6]);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, at + ": " + e.message());
    }
    levels.push_back(level);
  }
  if (levels.empty()) throw Error(ErrorCode::SchemaError, source + ": no rows for the requested variable");
  try {
    return Profile(instrument, *seen_variable, std::move(levels), std::move(station), std::move(timestamp));
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, source + ": " + e.message());
  }
}

Profile read_profile_csv(const fs::path& path, Instrument instrument, std::optional<Variable> variable) {
  return parse_profile_csv(read_file(path), instrument, variable, path.string());
}

std::string profile_csv(const Profile& profile) {
  check_text_field(profile.station_id(), "station_id");
  check_text_field(profile.timestamp(), "timestamp");
  std::string out(kProfileHeader);
  out += '\n';
  const std::string prefix =
      profile.station_id() + "," + profile.timestamp() + "," + std::string(to_string(profile.variable())) + ",";
  for (const Level& l : profile.levels()) {
    out += prefix;
    out += format_double(l.pressure) + "," + format_double(l.value) + "," + format_double(l.uncertainty) + ",";
    out += to_string(l.flag);
    out += '\n';
  }
  return out;
}

std::vector<IndexRow> parse_index_csv(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kIndexHeader)
    throw Error(ErrorCode::SchemaError, source + ": expected header '" + std::string(kIndexHeader) + "'");
  std::vector<IndexRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string at = where(source, i + 1);
    const auto f = split_fields(lines[i]);
    if (f.size() != 6) throw Error(ErrorCode::ParseError, at + ": expected 6 fields, found " + std::to_string(f.size()));
    if (f[0].empty() || f[1].empty() || f[2].empty())
      throw Error(ErrorCode::ParseError, at + ": pair_id, raob_file and iasi_file are required");
    rows.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]),
                    parse_double(f[4], at), parse_double(f[5], at)});
  }
  return rows;
}

std::string index_csv(const std::vector<IndexRow>& rows) {
  std::string out(kIndexHeader);
  out += '\n';
  for (const IndexRow& r : rows) {
    check_text_field(r.pair_id, "pair_id");
    out += r.pair_id + "," + r.raob_file + "," + r.iasi_file + "," + r.gruan_file + "," +
           format_double(r.distance_km) + "," + format_double(r.delay_h) + "\n";
  }
  return out;
}

LoadResult load_colocations(const fs::path& input, const PipelineConfig& config) {
  validate(config);
  const fs::path index_path = fs::is_directory(input) ? input / "index.csv" : input;
  const fs::path base = index_path.parent_path();
  const auto rows = parse_index_csv(read_file(index_path), index_path.string());

  LoadResult result;
  ColocationSet& set = result.set;
  set.variable = config.variable;
  set.pressure_range = config.pressure_range;
  LoadReport& rep = result.report;
  rep.total = rows.size();
  const std::optional<Variable> var = config.variable;
  for (const IndexRow& row : rows) {
    if (!within_colocation_window(row.distance_km, row.delay_h)) {
      ++rep.dropped_window;
      continue;
    }
    const Profile raob = read_profile_csv(base / row.raob_file, Instrument::Raob, var);
    const auto raob_in = raob.restricted_to(config.pressure_range);
    if (!raob_in || static_cast<int>(raob_in->size()) < config.min_raob_levels) {
      ++rep.dropped_raob_levels;
      continue;
    }
    const auto iasi_in = read_profile_csv(base / row.iasi_file, Instrument::Iasi, var).restricted_to(config.pressure_range);
    if (!iasi_in) {
      ++rep.dropped_iasi;
      continue;
    }
    std::optional<Profile> gruan;
    if (!row.gruan_file.empty())
      gruan = read_profile_csv(base / row.gruan_file, Instrument::Gruan, var).restricted_to(config.pressure_range);
    if (set.pairs.empty()) {
      set.iasi_grid = iasi_in->pressures();
    } else if (iasi_in->pressures() != set.iasi_grid) {
      throw Error(ErrorCode::SchemaError, "pair " + row.pair_id + " uses a different IASI grid");
    }
    ColocationPair pair{row.pair_id, *raob_in, *iasi_in, gruan, row.distance_km, row.delay_h};
    validate_pair(pair);
    if (pair.gruan) ++rep.gruan_kept;
    set.pairs.push_back(std::move(pair));
  }
  rep.kept = set.pairs.size();
  if (set.pairs.empty())
    throw Error(ErrorCode::EmptyAfterFilter, "no co-location of " + index_path.string() + " survives filtering");
  validate_set(set);
  return result;
}

void write_colocations(const ColocationSet& set, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "profiles", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + (dir / "profiles").string() + ": " + ec.message());
  std::vector<IndexRow> rows;
  for (const ColocationPair& pair : set.pairs) {
    IndexRow row{pair.pair_id, "profiles/" + pair.pair_id + "_raob.csv", "profiles/" + pair.pair_id + "_iasi.csv",
                 pair.gruan ? "profiles/" + pair.pair_id + "_gruan.csv" : "", pair.horizontal_distance_km,
                 pair.time_delay_h};
    write_file_atomic(dir / row.raob_file, profile_csv(pair.raob));
    write_file_atomic(dir / row.iasi_file, profile_csv(pair.iasi));
    if (pair.gruan) write_file_atomic(dir / row.gruan_file, profile_csv(*pair.gruan));
    rows.push_back(std::move(row));
  }
  write_file_atomic(dir / "index.csv", index_csv(rows));
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sondeharm
