#include "nhmm/states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nhmm/errors.hpp"

namespace nhmm {

int sample_state_at(std::size_t t, const StateChain& chain, const Eigen::MatrixXd& log_q_prev,
                    const Eigen::MatrixXd* log_q_next, const Eigen::Ref<const Eigen::VectorXd>& log_f, Rng& rng) {
  if (t == 0 || t >= chain.size()) throw InputError("state index out of range");
  const auto k_count = log_f.size();
  const int prev = chain[t - 1];
  Eigen::VectorXd w(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    w[k] = log_q_prev(prev, k) + log_f[k];
    if (log_q_next) w[k] += (*log_q_next)(k, chain[t + 1]);
  }
  const double top = w.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("no admissible hidden state on day " + std::to_string(t + 1));
  }
  Eigen::VectorXd p = (w.array() - top).exp();
  double u = rng.uniform() * p.sum();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    u -= p[k];
    if (u < 0.0) return static_cast<int>(k);
  }
  // Rounding left a sliver of mass: return the last state with positive weight.
  for (Eigen::Index k = k_count - 1; k >= 0; --k) {
    if (p[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

void sweep_states(StateChain& chain, const std::vector<Eigen::MatrixXd>& log_q, const Eigen::MatrixXd& log_f,
                  Rng& rng) {
  const std::size_t days = chain.size();
  if (log_q.size() != days || static_cast<std::size_t>(log_f.rows()) != days) {
    throw InputError("state sweep inputs differ in length");
  }
  if (log_f.cols() == 1) return;
  for (std::size_t t = 1; t < days; ++t) {
    const Eigen::MatrixXd* next = t + 1 < days ? &log_q[t + 1] : nullptr;
    chain[t] = sample_state_at(t, chain, log_q[t], next, log_f.row(static_cast<Eigen::Index>(t)).transpose(), rng);
  }
}

StateChain initial_states(std::size_t days, int states, Rng& rng) {
  StateChain chain;
  chain.z.resize(days, 0);
  for (std::size_t t = 1; t < days; ++t) chain[t] = static_cast<int>(rng.below(static_cast<std::size_t>(states)));
  return chain;
}

StateChain most_probable_states(std::span<const StateChain> draws, int states) {
  if (draws.empty()) throw InputError("no retained state draws");
  const std::size_t days = draws.front().size();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(days), states);
  for (const auto& d : draws) {
    if (d.size() != days) throw InputError("state draws differ in length");
    for (std::size_t t = 0; t < days; ++t) ++counts(static_cast<Eigen::Index>(t), d[t]);
  }
  return most_probable_states(counts);
}

StateChain most_probable_states(const Eigen::MatrixXi& counts) {
  StateChain out;
  out.z.resize(static_cast<std::size_t>(counts.rows()));
  for (Eigen::Index t = 0; t < counts.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < counts.cols(); ++k) {
      if (counts(t, k) > counts(t, best)) best = k;
    }
    out[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return out;
}

LabelPermutation align_labels(const StateChain& fitted, const StateChain& reference, int states) {
  if (fitted.size() != reference.size()) throw InputError("chains differ in length");
  if (states > 8) throw ConfigError("label alignment supports at most 8 states");
  Eigen::MatrixXi overlap = Eigen::MatrixXi::Zero(states, states);  // (reference, fitted)
  for (std::size_t t = 0; t < fitted.size(); ++t) ++overlap(reference[t], fitted[t]);

  LabelPermutation perm(static_cast<std::size_t>(states));
  std::iota(perm.begin(), perm.end(), 0);
  LabelPermutation best = perm;
  long best_score = -1;
  do {
    long score = 0;
    for (int r = 0; r < states; ++r) score += overlap(r, perm[static_cast<std::size_t>(r)]);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

StateChain relabel(const StateChain& chain, const LabelPermutation& perm) {
  std::vector<int> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  StateChain out = chain;
  for (auto& z : out.z) z = inverse[static_cast<std::size_t>(z)];
  return out;
}

void relabel(TransitionCoefficients& coeffs, EmissionParams& emission, const LabelPermutation& perm) {
  const int k_count = coeffs.states();
  const int b_count = coeffs.x_count();
  if (static_cast<int>(perm.size()) != k_count) throw InputError("permutation length does not match states");

  const Eigen::MatrixXd& old = coeffs.zeta;
  Eigen::MatrixXd zeta(k_count, k_count + b_count);
  const int base = perm[static_cast<std::size_t>(k_count - 1)];
  for (int to = 0; to < k_count; ++to) {
    const int old_to = perm[static_cast<std::size_t>(to)];
    for (int from = 0; from < k_count; ++from) {
      const int old_from = perm[static_cast<std::size_t>(from)];
      zeta(to, from) = old(old_to, old_from) - old(base, old_from);
    }
    for (int b = 0; b < b_count; ++b) zeta(to, k_count + b) = old(old_to, k_count + b) - old(base, k_count + b);
  }
  coeffs.zeta = zeta;

  auto permute_rows = [&](Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (int k = 0; k < k_count; ++k) out.row(k) = m.row(perm[static_cast<std::size_t>(k)]);
    m = out;
  };
  permute_rows(emission.lambda[0]);
  permute_rows(emission.lambda[1]);
  permute_rows(emission.beta0);
}

}  // namespace nhmm
