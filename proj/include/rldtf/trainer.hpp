#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rldtf/policy.hpp"
#include "rldtf/scoring.hpp"
#include "rldtf/sensitivity.hpp"
#include "rldtf/types.hpp"

namespace rldtf {

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::string term, const std::string& what) : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

// ---------------------------------------------------------------------------
// Rollouts

struct RolloutSample {
  Task task;
  TokenSeq prompt;
  TokenSeq completion;
  std::vector<double> old_logprobs;  // rollout-time policy
  RewardValue reward;
  std::vector<double> values;      // V(s_t) at rollout time
  std::vector<double> advantages;  // reward - values, per position
  std::vector<double> weights;     // token weights, >= 1
};

struct RolloutBatch {
  std::vector<RolloutSample> samples;
  std::size_t size() const { return samples.size(); }
};

// Model input whose positions prompt.size()-1 .. end predict the completion:
// prompt followed by all completion tokens but the last.
TokenSeq scoring_input(std::span<const Token> prompt, std::span<const Token> completion);

// ---------------------------------------------------------------------------
// Losses

struct LossCoefficients {
  double clip_eps = 0.2;
  double beta_ent = 0.01;
  double beta_kl = 0.05;
  double k1 = 0.5;
  double k2 = 1.0;
};

struct LossBreakdown {
  double policy = 0.0;
  double value = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double entropy = 0.0;  // mean over completion positions
  double kl_ref = 0.0;   // mean KL to the reference snapshot
};

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
double clipped_surrogate(double ratio, double advantage, double eps);

// Sum_t w_t * clipped_surrogate(exp(new_t - old_t), A_t, eps) for one sequence.
// Throws NonFiniteLoss when a ratio is not finite.
double weighted_surrogate_sum(std::span<const double> new_logprobs, std::span<const double> old_logprobs,
                              std::span<const double> advantages, std::span<const double> weights, double eps);

// Sum_t (r - V_t)^2 for one sequence.
double sequence_value_error(double reward, std::span<const double> values);

double policy_loss(const RolloutBatch& batch, const PolicyParams& params, double eps);
double value_loss(const RolloutBatch& batch, const PolicyParams& params);
double reg_loss(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& reference, double beta_ent,
                double beta_kl);
double total_loss(double policy, double value, double reg, double k1, double k2);

// Per-sample contribution to the minibatch loss; `scale` is 1/minibatch.
// Adds d(contribution)/dparams into grad when grad is non-empty.
using SampleObjective =
    std::function<LossBreakdown(const PolicyParams& params, const PolicyParams& reference,
                                const RolloutSample& sample, double scale, const LossCoefficients& coef,
                                std::span<double> grad)>;

LossBreakdown token_weighted_objective(const PolicyParams& params, const PolicyParams& reference,
                                       const RolloutSample& sample, double scale, const LossCoefficients& coef,
                                       std::span<double> grad);

// Total loss over a minibatch and its gradient. Per-sample gradients are
// reduced in sample order, independent of `workers`.
LossBreakdown loss_and_gradients(const PolicyParams& params, const PolicyParams& reference,
                                 std::span<const RolloutSample* const> minibatch, const LossCoefficients& coef,
                                 std::vector<double>& grad, int workers,
                                 const SampleObjective& objective = token_weighted_objective);

// ---------------------------------------------------------------------------
// Supervised stages

struct SftPair {
  TokenSeq prompt;
  TokenSeq completion;
  bool operator==(const SftPair&) const = default;
};

// Mean over pairs of summed token cross-entropy, with gradient.
double cross_entropy_and_gradients(const PolicyParams& params, std::span<const SftPair* const> pairs,
                                   std::vector<double>& grad, int workers);

struct PretrainConfig {
  int steps = 400;
  int batch_size = 32;
  double lr = 1e-3;
  void validate() const;
};

struct PretrainResult {
  double final_loss = 0.0;
  std::vector<double> losses;
};

// Cross-entropy on (prompt, uniformly random valid plan) pairs; prompts are
// drawn from `tasks`. QoS-blind by construction.
PretrainResult grammar_pretrain(PolicyParams& params, std::span<const Task> tasks, const PretrainConfig& cfg,
                                const AdamConfig& adam, std::uint64_t seed, int workers);

// Fraction of greedy decodes that parse.
double parse_success_rate(const PolicyParams& params, std::span<const Task> tasks, int workers);

struct RejectSamplingConfig {
  int completions_per_task = 8;
  double temperature = 1.0;
  int max_rounds = 4;
  double min_improvement = 0.01;
  int sft_epochs = 2;
  int minibatch_size = 32;
  double lr = 3e-4;
  void validate() const;
};

struct RejectRoundResult {
  double success_rate = 0.0;  // held-out greedy completion rate after the round
  std::size_t retained = 0;
  bool no_op = false;
};

// One round: sample G completions per task, keep the best satisfied one per
// task (deduplicated), run SFT epochs on the kept pairs.
RejectRoundResult reject_sampling_round(PolicyParams& params, std::span<const Task> tasks,
                                        std::span<const Task> heldout, const RejectSamplingConfig& cfg,
                                        const Scorer& scorer, const AdamConfig& adam, std::uint64_t seed, int round,
                                        int workers, double previous_success_rate);

struct RejectSamplingHistory {
  double initial_success_rate = 0.0;
  std::vector<RejectRoundResult> rounds;
  int accepted_rounds = 0;
};

// Repeats rounds until the held-out success rate grows by less than
// min_improvement or max_rounds is reached. A round that lowers the success
// rate is rolled back.
RejectSamplingHistory run_reject_sampling(PolicyParams& params, std::span<const Task> tasks,
                                          std::span<const Task> heldout, const RejectSamplingConfig& cfg,
                                          const Scorer& scorer, const AdamConfig& adam, std::uint64_t seed,
                                          int workers);

// ---------------------------------------------------------------------------
// RL from twin feedback

struct RLConfig {
  LossCoefficients loss;
  int batch_size = 64;
  int ppo_epochs = 4;
  int minibatch_size = 16;
  int reference_interval = 50;  // optimizer steps
  int total_steps = 600;
  double temperature = 1.0;
  double lr = 1e-4;
  void validate() const;
};

struct RlState {
  PolicyParams params;     // action model + critic head(s)
  PolicyParams reference;  // frozen snapshot for the KL term
  AdamState adam;
  std::uint64_t step = 0;
  std::uint64_t optimizer_steps = 0;
  std::uint64_t ref_version = 0;  // number of reference refreshes
};

RlState init_rl_state(const PolicyParams& initial);

struct RlContext {
  RLConfig rl;
  SensitivityConfig sensitivity;
  AdamConfig adam;  // lr is taken from rl.lr
  Scorer scorer;
  std::uint64_t seed = 0;
  int workers = 1;
  SampleObjective objective = token_weighted_objective;
};

// One completion per task at the configured temperature, scored, with
// values, advantages and token weights attached. Sample i draws from stream
// (seed, step, i).
RolloutBatch collect_rollouts(const PolicyParams& params, std::span<const Task> tasks, const RlContext& ctx,
                              std::uint64_t step);

struct StepMetrics {
  std::uint64_t step = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double reg_loss = 0.0;
  double total_loss = 0.0;
  double mean_reward = 0.0;
  double completion_rate = 0.0;
  std::uint64_t ref_version = 0;
  double kl_ref = 0.0;
  double entropy = 0.0;
  double parse_rate = 0.0;
};

// Draws a task batch, collects rollouts, runs the PPO epochs and refreshes
// the reference every reference_interval optimizer steps.
StepMetrics rl_step(RlState& state, std::span<const Task> tasks, const RlContext& ctx);

}  // namespace rldtf
