#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nhmm {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Daily rainfall, days x stations (mm/day). Unobserved cells hold 0 in
/// `values` and false in `mask`.
struct ObservationPanel {
  Eigen::MatrixXd values;
  BoolMatrix mask;
  std::vector<std::string> station_ids;

  Eigen::Index days() const { return values.rows(); }
  Eigen::Index stations() const { return values.cols(); }
  bool observed(Eigen::Index t, Eigen::Index s) const { return mask(t, s); }
  long observed_count() const { return static_cast<long>(mask.count()); }
  long missing_count() const { return static_cast<long>(mask.size()) - observed_count(); }

  /// Fully observed panel; station ids default to s1..sS.
  static ObservationPanel complete(Eigen::MatrixXd values);
  /// Rows [first, first + count).
  ObservationPanel slice(Eigen::Index first, Eigen::Index count) const;
};

/// Affine transform applied to one covariate column at ingestion.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  double apply(double raw) const { return (raw - mean) / scale; }
  double undo(double standardized) const { return standardized * scale + mean; }
};

/// Transition covariates x (days x B) and emission covariates w (A matrices of
/// days x stations), kept on the standardized scale.
struct CovariateSet {
  Eigen::MatrixXd x;
  std::vector<Eigen::MatrixXd> w;
  std::vector<std::string> x_names;
  std::vector<std::string> w_names;
  std::vector<Standardization> x_scaling;
  std::vector<Standardization> w_scaling;

  Eigen::Index days() const { return x.rows(); }
  Eigen::Index x_count() const { return x.cols(); }
  Eigen::Index w_count() const { return static_cast<Eigen::Index>(w.size()); }

  /// No covariates, for `days` days.
  static CovariateSet empty(Eigen::Index days);
  CovariateSet slice(Eigen::Index first, Eigen::Index count) const;
  /// Check shapes against a panel and that every value is finite.
  void validate(Eigen::Index days, Eigen::Index stations) const;
};

/// Fit mean / sample-sd scalings on rows [0, training_rows) (all rows when
/// negative) and apply them to every row. x columns are scaled one by one,
/// each w covariate is pooled over all stations. Throws InputError for a
/// column that is constant on the training rows.
void standardize(CovariateSet& covariates, Eigen::Index training_rows = -1);

/// Apply previously fitted scalings to raw covariates, matching columns by
/// name. Throws InputError for missing or unexpected columns.
void apply_scaling(CovariateSet& covariates, const std::vector<std::string>& x_names,
                   const std::vector<Standardization>& x_scaling, const std::vector<std::string>& w_names,
                   const std::vector<Standardization>& w_scaling);

/// Hidden state path with 0-based labels. Day 0 is pinned to state 0.
struct StateChain {
  std::vector<int> z;

  std::size_t size() const { return z.size(); }
  int operator[](std::size_t t) const { return z[t]; }
  int& operator[](std::size_t t) { return z[t]; }
  bool operator==(const StateChain&) const = default;
};

/// Model dimensions: states K, stations S, emission covariates A,
/// transition covariates B, days T.
struct ModelDims {
  int states = 1;
  int stations = 1;
  int w_count = 0;
  int x_count = 0;
  long days = 0;
};

ModelDims dims_of(const ObservationPanel& panel, const CovariateSet& covariates, int states);

}  // namespace nhmm
