#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"

namespace nhmm {

/// Read a rainfall panel: a header row of station ids, then one row per day.
/// `NA` (or an empty cell) marks a missing value. Throws InputError with the
/// row and column for negative or non-numeric cells and for ragged rows.
ObservationPanel load_panel(const std::filesystem::path& path);

/// Write in the layout load_panel reads, with values that round-trip exactly.
void write_panel(const ObservationPanel& panel, const std::filesystem::path& path);

/// Write a plain numeric table with the given column names.
void write_table(const Eigen::MatrixXd& values, const std::vector<std::string>& header,
                 const std::filesystem::path& path);

struct CovariateSources {
  /// days x B table; empty path means no transition covariates.
  std::filesystem::path x;
  /// Long table with columns day,station,name,value (day is 1-based).
  std::filesystem::path w_long;
  /// Directory holding one <station id>.csv table per station.
  std::filesystem::path w_dir;
};

/// Read raw (unstandardized) covariates for `days` days. A column whose
/// header ends in `:monthly` lists one value per month in its leading
/// non-empty cells; those are spread to days by interpolate_monthly.
CovariateSet load_covariates(const CovariateSources& sources, Eigen::Index days,
                             const std::vector<std::string>& station_ids);

/// Linear interpolation of monthly values to days on a 365-day calendar.
/// Month m of year y is anchored at the middle day of that month; days
/// before the first anchor or after the last one take the nearest value.
std::vector<double> interpolate_monthly(std::span<const double> monthly, Eigen::Index days);

enum class HarmonicTarget { None, X, W, Both };

HarmonicTarget parse_harmonic_target(const std::string& text);

/// Append sin/cos pairs with periods 365 and 182.5 days, evaluated at
/// day index first_day + t, as transition and/or emission covariates.
void add_harmonics(CovariateSet& covariates, HarmonicTarget target, Eigen::Index first_day, Eigen::Index stations);

/// Names of the columns add_harmonics creates.
std::vector<std::string> harmonic_names();

}  // namespace nhmm
