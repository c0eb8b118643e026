#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rldtf/dsl.hpp"
#include "rldtf/rng.hpp"
#include "rldtf/scoring.hpp"

namespace rldtf {

struct SensitivityConfig {
  int n_perturbations = 8;
  double alpha = 1.0;
  double lambda = 1e-6;
  double tau = 0.1;
  double delete_prob = 0.5;
  // Compute profiles for every stride-th rollout; the rest get unit weights.
  int stride = 1;

  void validate() const;
};

// Reward of a (possibly perturbed) completion for a fixed prompt.
using SequenceScorer = std::function<double(std::span<const Token>)>;

// Perturbs the 1-based position t: deletes it with probability delete_prob,
// otherwise replaces it with a token drawn uniformly from the other
// positions of the same completion. Single-token completions are always
// deleted.
TokenSeq perturb(std::span<const Token> tokens, std::size_t t, double delete_prob, Rng& rng);

// S_t = mean_n |R0 - R(perturbed_{n,t})|. Perturbation (t, n) draws from
// stream (stream_seed, t, n).
std::vector<double> estimate_sensitivity(const SequenceScorer& scorer, std::span<const Token> baseline, double r0,
                                         const SensitivityConfig& cfg, std::uint64_t stream_seed);

std::vector<double> estimate_sensitivity(const Scorer& scorer, const Task& task, std::span<const Token> baseline,
                                         double r0, const SensitivityConfig& cfg, std::uint64_t stream_seed);

// Expectation of the per-perturbation deviation over the perturbation
// distribution itself (deletion plus every other-position replacement):
// the N -> infinity limit of estimate_sensitivity.
std::vector<double> exact_sensitivity(const SequenceScorer& scorer, std::span<const Token> baseline, double r0,
                                      double delete_prob);

// w_t = 1 + alpha * S_t / (max S + lambda) where S_t > tau * max S, else 1.
std::vector<double> token_weights(std::span<const double> profile, const SensitivityConfig& cfg);

}  // namespace rldtf
