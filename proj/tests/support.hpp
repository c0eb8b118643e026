#pragma once

#include <cmath>
#include <vector>

#include "rldtf/policy.hpp"
#include "rldtf/task_model.hpp"
#include "rldtf/trainer.hpp"

namespace rldtf::testing {

inline ModelConfig micro_config(bool split = false) {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_ff = 16;
  c.split_backbone = split;
  return c;
}

// Parameters with every tensor (heads included) drawn at a scale large
// enough that no gradient is trivially zero.
inline PolicyParams randomized_params(const ModelConfig& cfg, std::uint64_t seed, double scale = 0.3) {
  PolicyParams p = init_params(cfg, seed);
  Rng rng = make_stream(seed, {0xF00D});
  for (auto& x : p.data) x += scale * normal(rng);
  return p;
}

inline RolloutSample make_sample(const PolicyParams& params, const Task& task, std::uint64_t seed, double reward,
                                 bool random_weights = true) {
  RolloutSample s;
  s.task = task;
  s.prompt = encode_prompt(task);
  Rng rng = make_stream(seed, {1});
  Completion c = sample_completion(params, s.prompt, {}, rng);
  s.completion = c.tokens;
  s.old_logprobs = c.logprobs;
  // Shift old log-probs so ratios differ from 1 and both clip branches occur.
  for (auto& lp : s.old_logprobs) lp += 0.4 * (uniform(rng, 0.0, 1.0) - 0.5);
  s.reward = {reward, RewardBranch::Violated};
  const ForwardOutput out = forward(params, scoring_input(s.prompt, s.completion));
  for (std::size_t t = 0; t < s.completion.size(); ++t) {
    s.values.push_back(out.values(static_cast<Eigen::Index>(s.prompt.size() - 1 + t)));
    s.advantages.push_back(reward - s.values.back());
    s.weights.push_back(random_weights ? 1.0 + uniform(rng, 0.0, 1.0) : 1.0);
  }
  return s;
}

inline double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / denom;
}

// Central differences at h = 1e-4 carry ~1e-10 of roundoff; below that the
// comparison is noise, not signal.
inline double fd_error(double fd, double analytic) {
  return std::abs(fd - analytic) <= 1e-9 ? 0.0 : rel_error(fd, analytic);
}

}  // namespace rldtf::testing
