#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/random.hpp"

namespace nhmm {

/// Multinomial-logistic transition coefficients.
///
/// `zeta` is K x (K + B). Row j belongs to destination state j; column i < K
/// holds the intercept for moving from previous state i into j, and the last
/// B columns hold the covariate weights of j. The row of the last state is
/// pinned to zero for identifiability.
struct TransitionCoefficients {
  Eigen::MatrixXd zeta;

  TransitionCoefficients() = default;
  TransitionCoefficients(int states, int x_count);

  int states() const { return static_cast<int>(zeta.rows()); }
  int x_count() const { return static_cast<int>(zeta.cols() - zeta.rows()); }
  int pinned() const { return states() - 1; }
  double intercept(int from, int to) const { return zeta(to, from); }

  /// Throws InputError unless the pinned row is zero and all entries finite.
  void validate() const;
};

/// log Q_t for covariate row x_t, evaluated with max-subtraction.
Eigen::MatrixXd log_transition_matrix(const TransitionCoefficients& coeffs,
                                      const Eigen::Ref<const Eigen::VectorXd>& x_t);
Eigen::MatrixXd transition_matrix(const TransitionCoefficients& coeffs,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_t);

/// log Q_t for every day of `x` (days x B). Entry t governs the move from
/// day t-1 into day t; entry 0 is computed but never used by the model.
std::vector<Eigen::MatrixXd> log_transition_matrices(const TransitionCoefficients& coeffs,
                                                     const Eigen::MatrixXd& x);

/// Regression view of the state path for the coefficient update.
struct DesignMatrices {
  /// Row t: one-hot previous state in the first K columns, x_t after.
  /// Row 0 has no previous day and carries the pinned initial state instead.
  Eigen::MatrixXd X;
  /// Row t: one-hot of z_t.
  Eigen::MatrixXd Z;
  /// Rows before this index are excluded from coefficient updates.
  Eigen::Index first_row = 1;

  Eigen::Index update_rows() const { return X.rows() > first_row ? X.rows() - first_row : 0; }
};

DesignMatrices build_design(const StateChain& states, const Eigen::MatrixXd& x, int state_count);

/// Polya-Gamma latents and the softmax holdout terms, days x K.
struct PgAugmentation {
  Eigen::MatrixXd omega;
  Eigen::MatrixXd eta;
  Eigen::MatrixXd holdout;  // log sum_{i != k} exp(X_t . zeta_i)

  PgAugmentation() = default;
  PgAugmentation(Eigen::Index days, int states);
};

/// Independent normal prior per coefficient; zero precision means flat.
struct TransitionPrior {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd precision;

  static TransitionPrior noninformative(int states, int x_count);
  static TransitionPrior isotropic(int states, int x_count, double variance);
};

struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

/// Recompute the holdout column of `category` against the current coefficients.
void refresh_holdout(const DesignMatrices& design, const TransitionCoefficients& coeffs, int category,
                     PgAugmentation& aug);

/// Normal full conditional of one category's coefficient row given omega and
/// the holdout: precision X' Omega X + P0, mean solving it against
/// X'((Z - 1/2) + Omega C) + P0 a.
GaussianConditional zeta_conditional(const DesignMatrices& design, int category, const PgAugmentation& aug,
                                     const TransitionPrior& prior);

/// One block-Gibbs pass over every non-pinned category: refresh the holdout,
/// draw omega, then draw the coefficient row. Throws NumericalError with the
/// category index when the conditional precision is singular.
void sample_zeta(const DesignMatrices& design, TransitionCoefficients& coeffs, PgAugmentation& aug,
                 const TransitionPrior& prior, Rng& rng);

/// Sum over t >= 1 of log q_{z_{t-1}, z_t, t}.
double transition_log_likelihood(const DesignMatrices& design, const TransitionCoefficients& coeffs);

}  // namespace nhmm
