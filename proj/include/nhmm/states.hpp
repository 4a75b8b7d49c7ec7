#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/random.hpp"
#include "nhmm/transition.hpp"

namespace nhmm {

/// Draw z_t from its full conditional given z_{t-1} and z_{t+1}.
///
/// `log_q_prev` is log Q for the move into day t and `log_q_next` for the move
/// into day t+1 (null on the last day). `log_f` holds the summed emission
/// log-densities of day t per state. Requires 1 <= t < chain.size().
int sample_state_at(std::size_t t, const StateChain& chain, const Eigen::MatrixXd& log_q_prev,
                    const Eigen::MatrixXd* log_q_next, const Eigen::Ref<const Eigen::VectorXd>& log_f, Rng& rng);

/// One left-to-right pass over days 1..T-1. `log_q[t]` governs the move into
/// day t; `log_f` is days x K. Day 0 is never changed.
void sweep_states(StateChain& chain, const std::vector<Eigen::MatrixXd>& log_q, const Eigen::MatrixXd& log_f,
                  Rng& rng);

/// Uniform start over the K states, with day 0 pinned to state 0.
StateChain initial_states(std::size_t days, int states, Rng& rng);

/// Per-day mode across draws; ties go to the smallest state index.
StateChain most_probable_states(std::span<const StateChain> draws, int states);

/// Same rule applied to a days x K table of visit counts.
StateChain most_probable_states(const Eigen::MatrixXi& counts);

/// Label permutation with perm[new] = old.
using LabelPermutation = std::vector<int>;

/// Permutation of the fitted labels maximizing day-wise agreement with a
/// reference chain (exhaustive search, K <= 8). Relabeling with it maps each
/// fitted regime onto the reference regime it overlaps most.
LabelPermutation align_labels(const StateChain& fitted, const StateChain& reference, int states);

StateChain relabel(const StateChain& chain, const LabelPermutation& perm);

/// Rewrite the parameters under new labels. The transition logits are
/// re-expressed against the state that becomes the new last label, so the
/// transition matrices are unchanged up to the permutation.
void relabel(TransitionCoefficients& coeffs, EmissionParams& emission, const LabelPermutation& perm);

}  // namespace nhmm
