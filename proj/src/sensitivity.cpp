#include "rldtf/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rldtf {

void SensitivityConfig::validate() const {
  if (n_perturbations < 1) throw std::invalid_argument("sensitivity.n_perturbations must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("sensitivity.alpha must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("sensitivity.lambda must be > 0");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("sensitivity.tau must lie in [0, 1]");
  if (!(delete_prob >= 0.0 && delete_prob <= 1.0))
    throw std::invalid_argument("sensitivity.delete_prob must lie in [0, 1]");
  if (stride < 1) throw std::invalid_argument("sensitivity.stride must be >= 1");
}

TokenSeq perturb(std::span<const Token> tokens, std::size_t t, double delete_prob, Rng& rng) {
  if (t < 1 || t > tokens.size()) throw std::out_of_range("perturbation position outside completion");
  const std::size_t at = t - 1;
  TokenSeq out(tokens.begin(), tokens.end());
  const bool forced = tokens.size() == 1;
  if (forced || bernoulli(rng, delete_prob)) {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(at));
    return out;
  }
  std::size_t pick = uniform_index(rng, tokens.size() - 1);
  if (pick >= at) ++pick;
  out[at] = tokens[pick];
  return out;
}

std::vector<double> estimate_sensitivity(const SequenceScorer& scorer, std::span<const Token> baseline, double r0,
                                         const SensitivityConfig& cfg, std::uint64_t stream_seed) {
  std::vector<double> s(baseline.size(), 0.0);
  for (std::size_t t = 1; t <= baseline.size(); ++t) {
    double acc = 0.0;
    for (int n = 0; n < cfg.n_perturbations; ++n) {
      Rng rng = make_stream(stream_seed, {t, static_cast<std::uint64_t>(n)});
      const TokenSeq p = perturb(baseline, t, cfg.delete_prob, rng);
      acc += std::abs(r0 - scorer(p));
    }
    s[t - 1] = acc / cfg.n_perturbations;
  }
  return s;
}

std::vector<double> estimate_sensitivity(const Scorer& scorer, const Task& task, std::span<const Token> baseline,
                                         double r0, const SensitivityConfig& cfg, std::uint64_t stream_seed) {
  return estimate_sensitivity([&](std::span<const Token> seq) { return scorer.score(task, seq).value; }, baseline,
                              r0, cfg, stream_seed);
}

std::vector<double> exact_sensitivity(const SequenceScorer& scorer, std::span<const Token> baseline, double r0,
                                      double delete_prob) {
  const std::size_t T = baseline.size();
  std::vector<double> s(T, 0.0);
  for (std::size_t at = 0; at < T; ++at) {
    TokenSeq deleted(baseline.begin(), baseline.end());
    deleted.erase(deleted.begin() + static_cast<std::ptrdiff_t>(at));
    const double d_del = std::abs(r0 - scorer(deleted));
    if (T == 1) {
      s[at] = d_del;
      continue;
    }
    double d_rep = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
      if (j == at) continue;
      TokenSeq replaced(baseline.begin(), baseline.end());
      replaced[at] = baseline[j];
      d_rep += std::abs(r0 - scorer(replaced));
    }
    s[at] = delete_prob * d_del + (1.0 - delete_prob) * d_rep / static_cast<double>(T - 1);
  }
  return s;
}

std::vector<double> token_weights(std::span<const double> profile, const SensitivityConfig& cfg) {
  std::vector<double> w(profile.size(), 1.0);
  if (profile.empty()) return w;
  const double max_s = *std::max_element(profile.begin(), profile.end());
  for (std::size_t t = 0; t < profile.size(); ++t)
    if (profile[t] > cfg.tau * max_s) w[t] = 1.0 + cfg.alpha * profile[t] / (max_s + cfg.lambda);
  return w;
}

}  // namespace rldtf
