#include "nhmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "nhmm/errors.hpp"
#include "nhmm/stats.hpp"
#include "nhmm/store.hpp"

namespace nhmm {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMonthlySuffix = ":monthly";
constexpr int kMonthLength[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? comma : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;
};

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Table table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InputError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw InputError(path.string() + ": file is empty");
  return table;
}

bool parse_double(const std::string& token, double& value) {
  if (token.empty()) return false;
  const char* begin = token.data();
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, token.data() + token.size(), value);
  return res.ec == std::errc() && res.ptr == token.data() + token.size() && std::isfinite(value);
}

double parse_cell(const Table& table, std::size_t row, std::size_t col, const fs::path& path) {
  double v = 0.0;
  if (!parse_double(table.rows[row][col], v)) {
    throw InputError(path.string() + ": non-numeric value '" + table.rows[row][col] + "' at line " +
                     std::to_string(table.line_numbers[row]) + ", column " + std::to_string(col + 1));
  }
  return v;
}

bool is_monthly(const std::string& name) {
  return name.size() > kMonthlySuffix.size() &&
         name.compare(name.size() - kMonthlySuffix.size(), kMonthlySuffix.size(), kMonthlySuffix) == 0;
}

std::string base_name(const std::string& name) {
  return is_monthly(name) ? name.substr(0, name.size() - kMonthlySuffix.size()) : name;
}

// Columns of a wide covariate table, expanded to `days` daily values.
Eigen::MatrixXd read_wide(const fs::path& path, Eigen::Index days, std::vector<std::string>& names) {
  const Table table = read_table(path);
  const auto cols = table.header.size();
  Eigen::MatrixXd out(days, static_cast<Eigen::Index>(cols));
  names.clear();
  for (std::size_t c = 0; c < cols; ++c) {
    const std::string& name = table.header[c];
    if (base_name(name).empty()) throw InputError(path.string() + ": empty column name");
    names.push_back(base_name(name));
    if (is_monthly(name)) {
      std::vector<double> monthly;
      std::size_t r = 0;
      for (; r < table.rows.size() && !table.rows[r][c].empty(); ++r) monthly.push_back(parse_cell(table, r, c, path));
      for (; r < table.rows.size(); ++r) {
        if (!table.rows[r][c].empty()) {
          throw InputError(path.string() + ": monthly column '" + names.back() + "' has a gap before line " +
                           std::to_string(table.line_numbers[r]));
        }
      }
      if (monthly.empty()) throw InputError(path.string() + ": monthly column '" + names.back() + "' is empty");
      const auto daily = interpolate_monthly(monthly, days);
      for (Eigen::Index t = 0; t < days; ++t) out(t, static_cast<Eigen::Index>(c)) = daily[static_cast<std::size_t>(t)];
    } else {
      if (static_cast<Eigen::Index>(table.rows.size()) != days) {
        throw InputError(path.string() + ": column '" + name + "' has " + std::to_string(table.rows.size()) +
                         " rows, expected " + std::to_string(days));
      }
      for (Eigen::Index t = 0; t < days; ++t) {
        out(t, static_cast<Eigen::Index>(c)) = parse_cell(table, static_cast<std::size_t>(t), c, path);
      }
    }
  }
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw InputError(path.string() + ": duplicate column names");
  return out;
}

void load_w_long(const fs::path& path, Eigen::Index days, const std::vector<std::string>& station_ids,
                 CovariateSet& out) {
  const Table table = read_table(path);
  const std::vector<std::string> expected{"day", "station", "name", "value"};
  if (table.header != expected) throw InputError(path.string() + ": expected header day,station,name,value");

  std::map<std::string, std::size_t> station_index;
  for (std::size_t s = 0; s < station_ids.size(); ++s) station_index[station_ids[s]] = s;
  std::map<std::string, std::size_t> name_index;
  for (const auto& row : table.rows) {
    if (is_monthly(row[2])) throw InputError(path.string() + ": monthly columns need the per-station layout");
    if (row[2].empty()) throw InputError(path.string() + ": empty covariate name");
    if (name_index.emplace(row[2], name_index.size()).second) out.w_names.push_back(row[2]);
  }

  const auto stations = static_cast<Eigen::Index>(station_ids.size());
  out.w.assign(name_index.size(), Eigen::MatrixXd::Constant(days, stations, std::nan("")));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = " at line " + std::to_string(table.line_numbers[r]);
    double day = 0.0;
    if (!parse_double(row[0], day) || day != std::floor(day) || day < 1 || day > static_cast<double>(days)) {
      throw InputError(path.string() + ": invalid day '" + row[0] + "'" + where);
    }
    const auto st = station_index.find(row[1]);
    if (st == station_index.end()) throw InputError(path.string() + ": unknown station '" + row[1] + "'" + where);
    double& cell = out.w[name_index[row[2]]](static_cast<Eigen::Index>(day) - 1, static_cast<Eigen::Index>(st->second));
    if (!std::isnan(cell)) throw InputError(path.string() + ": duplicate entry" + where);
    cell = parse_cell(table, r, 3, path);
  }
  for (std::size_t a = 0; a < out.w.size(); ++a) {
    for (Eigen::Index t = 0; t < days; ++t) {
      for (Eigen::Index s = 0; s < stations; ++s) {
        if (std::isnan(out.w[a](t, s))) {
          throw InputError(path.string() + ": no value for '" + out.w_names[a] + "' on day " + std::to_string(t + 1) +
                           " at station '" + station_ids[static_cast<std::size_t>(s)] + "'");
        }
      }
    }
  }
}

void load_w_dir(const fs::path& dir, Eigen::Index days, const std::vector<std::string>& station_ids,
                CovariateSet& out) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    const auto stem = entry.path().stem().string();
    if (std::find(station_ids.begin(), station_ids.end(), stem) == station_ids.end()) {
      throw InputError(entry.path().string() + ": unknown station '" + stem + "'");
    }
  }
  const auto stations = static_cast<Eigen::Index>(station_ids.size());
  for (Eigen::Index s = 0; s < stations; ++s) {
    const fs::path path = dir / (station_ids[static_cast<std::size_t>(s)] + ".csv");
    if (!fs::exists(path)) throw InputError("missing emission covariates for station: " + path.string());
    std::vector<std::string> names;
    const Eigen::MatrixXd table = read_wide(path, days, names);
    if (s == 0) {
      out.w_names = names;
      out.w.assign(names.size(), Eigen::MatrixXd(days, stations));
    } else if (names != out.w_names) {
      throw InputError(path.string() + ": columns differ from the first station's file");
    }
    for (std::size_t a = 0; a < names.size(); ++a) out.w[a].col(s) = table.col(static_cast<Eigen::Index>(a));
  }
}

}  // namespace

ObservationPanel load_panel(const fs::path& path) {
  const Table table = read_table(path);
  ObservationPanel panel;
  panel.station_ids = table.header;
  std::set<std::string> unique;
  for (const auto& id : panel.station_ids) {
    if (id.empty()) throw InputError(path.string() + ": empty station identifier in header");
    if (!unique.insert(id).second) throw InputError(path.string() + ": duplicate station identifier '" + id + "'");
  }
  const auto days = static_cast<Eigen::Index>(table.rows.size());
  const auto stations = static_cast<Eigen::Index>(table.header.size());
  if (days < 2) throw InputError(path.string() + ": at least 2 days of observations are required");
  panel.values = Eigen::MatrixXd::Zero(days, stations);
  panel.mask = BoolMatrix::Constant(days, stations, true);
  for (Eigen::Index t = 0; t < days; ++t) {
    for (Eigen::Index s = 0; s < stations; ++s) {
      const std::string& token = table.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      if (token == "NA" || token.empty()) {
        panel.mask(t, s) = false;
        continue;
      }
      const double v = parse_cell(table, static_cast<std::size_t>(t), static_cast<std::size_t>(s), path);
      if (v < 0.0) {
        throw InputError(path.string() + ": negative rainfall " + token + " at line " +
                         std::to_string(table.line_numbers[static_cast<std::size_t>(t)]) + ", column " +
                         std::to_string(s + 1) + " (station '" + panel.station_ids[static_cast<std::size_t>(s)] +
                         "')");
      }
      panel.values(t, s) = v;
    }
  }
  return panel;
}

void write_panel(const ObservationPanel& panel, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t s = 0; s < panel.station_ids.size(); ++s) out << (s ? "," : "") << panel.station_ids[s];
  out << '\n';
  for (Eigen::Index t = 0; t < panel.days(); ++t) {
    for (Eigen::Index s = 0; s < panel.stations(); ++s) {
      if (s) out << ',';
      out << (panel.observed(t, s) ? format_double(panel.values(t, s)) : std::string("NA"));
    }
    out << '\n';
  }
}

void write_table(const Eigen::MatrixXd& values, const std::vector<std::string>& header, const fs::path& path) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) throw InputError("header does not match columns");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
}

CovariateSet load_covariates(const CovariateSources& sources, Eigen::Index days,
                             const std::vector<std::string>& station_ids) {
  if (!sources.w_long.empty() && !sources.w_dir.empty()) {
    throw ConfigError("give emission covariates either as one long table or as a directory, not both");
  }
  CovariateSet cov = CovariateSet::empty(days);
  if (!sources.x.empty()) cov.x = read_wide(sources.x, days, cov.x_names);
  if (!sources.w_long.empty()) load_w_long(sources.w_long, days, station_ids, cov);
  if (!sources.w_dir.empty()) load_w_dir(sources.w_dir, days, station_ids, cov);
  cov.validate(days, static_cast<Eigen::Index>(station_ids.size()));
  return cov;
}

std::vector<double> interpolate_monthly(std::span<const double> monthly, Eigen::Index days) {
  if (monthly.empty()) throw InputError("no monthly values to interpolate");
  std::vector<double> anchors(monthly.size());
  int start[12];
  start[0] = 0;
  for (int m = 1; m < 12; ++m) start[m] = start[m - 1] + kMonthLength[m - 1];
  for (std::size_t i = 0; i < monthly.size(); ++i) {
    const auto m = i % 12;
    anchors[i] = 365.0 * static_cast<double>(i / 12) + start[m] + 0.5 * (kMonthLength[m] - 1);
  }
  std::vector<double> daily(static_cast<std::size_t>(days));
  std::size_t seg = 0;
  for (Eigen::Index t = 0; t < days; ++t) {
    const auto day = static_cast<double>(t);
    if (day <= anchors.front()) {
      daily[static_cast<std::size_t>(t)] = monthly.front();
    } else if (day >= anchors.back()) {
      daily[static_cast<std::size_t>(t)] = monthly.back();
    } else {
      while (anchors[seg + 1] < day) ++seg;
      const double frac = (day - anchors[seg]) / (anchors[seg + 1] - anchors[seg]);
      daily[static_cast<std::size_t>(t)] = monthly[seg] + frac * (monthly[seg + 1] - monthly[seg]);
    }
  }
  return daily;
}

HarmonicTarget parse_harmonic_target(const std::string& text) {
  if (text == "none") return HarmonicTarget::None;
  if (text == "x") return HarmonicTarget::X;
  if (text == "w") return HarmonicTarget::W;
  if (text == "both") return HarmonicTarget::Both;
  throw ConfigError("harmonic target must be one of none, x, w, both");
}

std::vector<std::string> harmonic_names() { return {"sin365", "cos365", "sin182.5", "cos182.5"}; }

void add_harmonics(CovariateSet& covariates, HarmonicTarget target, Eigen::Index first_day, Eigen::Index stations) {
  if (target == HarmonicTarget::None) return;
  const Eigen::Index days = covariates.days();
  const double periods[2] = {365.0, 182.5};
  Eigen::MatrixXd h(days, 4);
  for (Eigen::Index t = 0; t < days; ++t) {
    const auto day = static_cast<double>(first_day + t);
    for (int p = 0; p < 2; ++p) {
      h(t, 2 * p) = std::sin(2.0 * kPi * day / periods[p]);
      h(t, 2 * p + 1) = std::cos(2.0 * kPi * day / periods[p]);
    }
  }
  const auto names = harmonic_names();
  if (target == HarmonicTarget::X || target == HarmonicTarget::Both) {
    Eigen::MatrixXd x(days, covariates.x_count() + 4);
    x << covariates.x, h;
    covariates.x = std::move(x);
    covariates.x_names.insert(covariates.x_names.end(), names.begin(), names.end());
  }
  if (target == HarmonicTarget::W || target == HarmonicTarget::Both) {
    for (int c = 0; c < 4; ++c) {
      covariates.w.push_back(h.col(c).replicate(1, stations));
      covariates.w_names.push_back(names[static_cast<std::size_t>(c)]);
    }
  }
}

}  // namespace nhmm
