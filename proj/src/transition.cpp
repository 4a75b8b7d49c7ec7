#include "nhmm/transition.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nhmm/errors.hpp"
#include "nhmm/polya_gamma.hpp"

namespace nhmm {

namespace {

double log_sum_exp_excluding(const Eigen::VectorXd& v, Eigen::Index skip) {
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i != skip) top = std::max(top, v[i]);
  }
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i != skip) acc += std::exp(v[i] - top);
  }
  return top + std::log(acc);
}

}  // namespace

TransitionCoefficients::TransitionCoefficients(int states, int x_count)
    : zeta(Eigen::MatrixXd::Zero(states, states + x_count)) {
  if (states < 1) throw ConfigError("at least one hidden state is required");
  if (x_count < 0) throw ConfigError("negative covariate count");
}

void TransitionCoefficients::validate() const {
  if (zeta.rows() < 1 || zeta.cols() < zeta.rows()) throw InputError("transition coefficients have invalid shape");
  if (!zeta.allFinite()) throw InputError("transition coefficients contain non-finite values");
  if (!zeta.row(pinned()).isZero(0.0)) throw InputError("pinned transition row is not zero");
}

Eigen::MatrixXd log_transition_matrix(const TransitionCoefficients& coeffs,
                                      const Eigen::Ref<const Eigen::VectorXd>& x_t) {
  const int k_count = coeffs.states();
  const int b_count = coeffs.x_count();
  if (x_t.size() != b_count) throw InputError("covariate row length does not match coefficients");
  if (!x_t.allFinite()) throw InputError("non-finite transition covariate");

  Eigen::VectorXd covariate_score = Eigen::VectorXd::Zero(k_count);
  if (b_count > 0) covariate_score = coeffs.zeta.rightCols(b_count) * x_t;

  Eigen::MatrixXd log_q(k_count, k_count);
  for (int from = 0; from < k_count; ++from) {
    Eigen::VectorXd score = coeffs.zeta.col(from) + covariate_score;
    const double top = score.maxCoeff();
    const double norm = top + std::log((score.array() - top).exp().sum());
    log_q.row(from) = (score.array() - norm).matrix().transpose();
  }
  return log_q;
}

Eigen::MatrixXd transition_matrix(const TransitionCoefficients& coeffs,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_t) {
  return log_transition_matrix(coeffs, x_t).array().exp().matrix();
}

std::vector<Eigen::MatrixXd> log_transition_matrices(const TransitionCoefficients& coeffs,
                                                     const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    out[static_cast<std::size_t>(t)] = log_transition_matrix(coeffs, x.row(t).transpose());
  }
  return out;
}

DesignMatrices build_design(const StateChain& states, const Eigen::MatrixXd& x, int state_count) {
  const auto days = static_cast<Eigen::Index>(states.size());
  if (x.rows() != days) throw InputError("state chain and covariates differ in length");
  DesignMatrices d;
  d.X = Eigen::MatrixXd::Zero(days, state_count + x.cols());
  d.Z = Eigen::MatrixXd::Zero(days, state_count);
  for (Eigen::Index t = 0; t < days; ++t) {
    const int z = states[static_cast<std::size_t>(t)];
    if (z < 0 || z >= state_count) {
      throw InputError("state " + std::to_string(z + 1) + " on day " + std::to_string(t + 1) +
                       " is outside 1.." + std::to_string(state_count));
    }
    const int prev = t == 0 ? z : states[static_cast<std::size_t>(t - 1)];
    d.X(t, prev) = 1.0;
    d.X.row(t).tail(x.cols()) = x.row(t);
    d.Z(t, z) = 1.0;
  }
  d.first_row = 1;
  return d;
}

PgAugmentation::PgAugmentation(Eigen::Index days, int states)
    : omega(Eigen::MatrixXd::Constant(days, states, 0.25)),
      eta(Eigen::MatrixXd::Zero(days, states)),
      holdout(Eigen::MatrixXd::Zero(days, states)) {}

TransitionPrior TransitionPrior::noninformative(int states, int x_count) {
  TransitionPrior p;
  p.mean = Eigen::MatrixXd::Zero(states, states + x_count);
  p.precision = Eigen::MatrixXd::Zero(states, states + x_count);
  return p;
}

TransitionPrior TransitionPrior::isotropic(int states, int x_count, double variance) {
  if (!(variance > 0.0)) throw ConfigError("prior variance must be positive");
  TransitionPrior p = noninformative(states, x_count);
  p.precision.setConstant(1.0 / variance);
  return p;
}

void refresh_holdout(const DesignMatrices& design, const TransitionCoefficients& coeffs, int category,
                     PgAugmentation& aug) {
  const Eigen::MatrixXd scores = design.X * coeffs.zeta.transpose();  // days x K
  for (Eigen::Index t = 0; t < scores.rows(); ++t) {
    aug.holdout(t, category) = log_sum_exp_excluding(scores.row(t).transpose(), category);
  }
}

GaussianConditional zeta_conditional(const DesignMatrices& design, int category, const PgAugmentation& aug,
                                     const TransitionPrior& prior) {
  const Eigen::Index rows = design.update_rows();
  const Eigen::Index first = design.first_row;
  const auto X = design.X.middleRows(first, rows);
  const auto omega = aug.omega.col(category).segment(first, rows);
  const auto holdout = aug.holdout.col(category).segment(first, rows);
  const Eigen::VectorXd kappa = design.Z.col(category).segment(first, rows).array() - 0.5;

  GaussianConditional g;
  g.precision = X.transpose() * omega.asDiagonal() * X;
  g.precision.diagonal() += prior.precision.row(category).transpose();
  const Eigen::VectorXd working = kappa + omega.cwiseProduct(holdout);
  Eigen::VectorXd rhs = X.transpose() * working;
  rhs += prior.precision.row(category).transpose().cwiseProduct(prior.mean.row(category).transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(g.precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("singular posterior precision for transition category " + std::to_string(category + 1));
  }
  g.mean = llt.solve(rhs);
  return g;
}

void sample_zeta(const DesignMatrices& design, TransitionCoefficients& coeffs, PgAugmentation& aug,
                 const TransitionPrior& prior, Rng& rng) {
  const Eigen::Index days = design.X.rows();
  const Eigen::Index first = design.first_row;
  for (int k = 0; k < coeffs.states(); ++k) {
    if (k == coeffs.pinned()) continue;
    refresh_holdout(design, coeffs, k, aug);
    aug.eta.col(k) = design.X * coeffs.zeta.row(k).transpose() - aug.holdout.col(k);

    const std::uint64_t key = rng.key();
#pragma omp parallel for schedule(static)
    for (Eigen::Index t = first; t < days; ++t) {
      Rng stream(key, {static_cast<std::uint64_t>(t)});
      aug.omega(t, k) = pg::draw_pg1(aug.eta(t, k), stream);
    }

    const GaussianConditional g = zeta_conditional(design, k, aug, prior);
    Eigen::LLT<Eigen::MatrixXd> llt(g.precision);
    Eigen::VectorXd noise(g.mean.size());
    for (Eigen::Index h = 0; h < noise.size(); ++h) noise[h] = rng.normal();
    const Eigen::VectorXd draw = g.mean + llt.matrixU().solve(noise);
    if (!draw.allFinite()) {
      throw NumericalError("non-finite coefficient draw for transition category " + std::to_string(k + 1));
    }
    coeffs.zeta.row(k) = draw.transpose();
  }
}

double transition_log_likelihood(const DesignMatrices& design, const TransitionCoefficients& coeffs) {
  const int k_count = coeffs.states();
  double total = 0.0;
  Eigen::VectorXd score(k_count);
  for (Eigen::Index t = design.first_row; t < design.X.rows(); ++t) {
    score = coeffs.zeta * design.X.row(t).transpose();
    Eigen::Index current = 0;
    design.Z.row(t).maxCoeff(&current);
    const double top = score.maxCoeff();
    total += score[current] - (top + std::log((score.array() - top).exp().sum()));
  }
  return total;
}

}  // namespace nhmm
