#include "rldtf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rldtf/parallel.hpp"
#include "rldtf/task_model.hpp"

namespace rldtf {

namespace {

// Stream tags.
constexpr std::uint64_t kTagRollout = 0x52;
constexpr std::uint64_t kTagSensitivity = 0x53;
constexpr std::uint64_t kTagBatch = 0x42;
constexpr std::uint64_t kTagShuffle = 0x50;
constexpr std::uint64_t kTagPretrain = 0x47;
constexpr std::uint64_t kTagReject = 0x4A;
constexpr std::uint64_t kTagSft = 0x46;

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NonFiniteLoss(term, std::string("non-finite ") + term + " loss");
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  return idx;
}

struct PositionStats {
  double entropy;
  double kl;
};

// Entropy of p and KL(p || q) from log-probability rows.
PositionStats position_stats(const Eigen::Ref<const RowVec>& lp, const Eigen::Ref<const RowVec>& lq) {
  const RowVec p = lp.array().exp();
  return {-(p.array() * lp.array()).sum(), (p.array() * (lp - lq).array()).sum()};
}

std::size_t completion_offset(const RolloutSample& s) { return s.prompt.size() - 1; }

Mat completion_logprobs(const PolicyParams& params, std::span<const Token> prompt, std::span<const Token> completion,
                        ForwardOutput* out_full = nullptr, ForwardTrace* trace = nullptr) {
  const TokenSeq input = scoring_input(prompt, completion);
  ForwardOutput out = forward(params, input, trace);
  Mat lp = log_softmax(out.logits.middleRows(static_cast<Eigen::Index>(prompt.size() - 1),
                                             static_cast<Eigen::Index>(completion.size())));
  if (out_full) *out_full = std::move(out);
  return lp;
}

AdamConfig with_lr(AdamConfig a, double lr) {
  a.lr = lr;
  return a;
}

}  // namespace

TokenSeq scoring_input(std::span<const Token> prompt, std::span<const Token> completion) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  if (completion.empty()) throw std::invalid_argument("empty completion");
  TokenSeq input(prompt.begin(), prompt.end());
  input.insert(input.end(), completion.begin(), completion.end() - 1);
  return input;
}

// ---------------------------------------------------------------------------
// Losses

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double weighted_surrogate_sum(std::span<const double> new_logprobs, std::span<const double> old_logprobs,
                              std::span<const double> advantages, std::span<const double> weights, double eps) {
  const std::size_t T = new_logprobs.size();
  if (old_logprobs.size() != T || advantages.size() != T || weights.size() != T)
    throw std::invalid_argument("per-token arrays differ in length");
  double sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double ratio = std::exp(new_logprobs[t] - old_logprobs[t]);
    if (!std::isfinite(ratio)) throw NonFiniteLoss("policy", "non-finite probability ratio at token " + std::to_string(t));
    sum += weights[t] * clipped_surrogate(ratio, advantages[t], eps);
  }
  return sum;
}

double policy_loss(const RolloutBatch& batch, const PolicyParams& params, double eps) {
  if (batch.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : batch.samples) {
    const Mat lp = completion_logprobs(params, s.prompt, s.completion);
    std::vector<double> new_lp(s.completion.size());
    for (std::size_t t = 0; t < new_lp.size(); ++t) new_lp[t] = lp(static_cast<Eigen::Index>(t), s.completion[t]);
    acc += weighted_surrogate_sum(new_lp, s.old_logprobs, s.advantages, s.weights, eps);
  }
  const double loss = -acc / static_cast<double>(batch.size());
  require_finite(loss, "policy");
  return loss;
}

double sequence_value_error(double reward, std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) {
    const double err = reward - v;
    acc += err * err;
  }
  return acc;
}

double value_loss(const RolloutBatch& batch, const PolicyParams& params) {
  if (batch.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : batch.samples) {
    const ForwardOutput out = forward(params, scoring_input(s.prompt, s.completion));
    const Vec v = out.values.segment(static_cast<Eigen::Index>(completion_offset(s)),
                                     static_cast<Eigen::Index>(s.completion.size()));
    acc += sequence_value_error(s.reward.value, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }
  const double loss = acc / static_cast<double>(batch.size());
  require_finite(loss, "value");
  return loss;
}

double reg_loss(const RolloutBatch& batch, const PolicyParams& params, const PolicyParams& reference, double beta_ent,
                double beta_kl) {
  if (batch.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : batch.samples) {
    const Mat lp = completion_logprobs(params, s.prompt, s.completion);
    const Mat lq = completion_logprobs(reference, s.prompt, s.completion);
    double seq = 0.0;
    for (Eigen::Index t = 0; t < lp.rows(); ++t) {
      const PositionStats st = position_stats(lp.row(t), lq.row(t));
      seq += -beta_ent * st.entropy + beta_kl * st.kl;
    }
    acc += seq / static_cast<double>(lp.rows());
  }
  const double loss = acc / static_cast<double>(batch.size());
  require_finite(loss, "reg");
  return loss;
}

double total_loss(double policy, double value, double reg, double k1, double k2) {
  return policy + k1 * value + k2 * reg;
}

LossBreakdown token_weighted_objective(const PolicyParams& params, const PolicyParams& reference,
                                       const RolloutSample& s, double scale, const LossCoefficients& coef,
                                       std::span<double> grad) {
  const std::size_t T = s.completion.size();
  const Eigen::Index first = static_cast<Eigen::Index>(completion_offset(s));
  ForwardTrace trace;
  ForwardOutput out;
  const Mat lp = completion_logprobs(params, s.prompt, s.completion, &out, grad.empty() ? nullptr : &trace);
  const Mat lq = completion_logprobs(reference, s.prompt, s.completion);

  Mat dlogits = Mat::Zero(out.logits.rows(), out.logits.cols());
  Vec dvalues = Vec::Zero(out.values.size());
  LossBreakdown b;
  double surrogate = 0.0, sq_err = 0.0, reg = 0.0, ent = 0.0, kl = 0.0;
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const Token a = s.completion[t];
    const double ratio = std::exp(lp(row, a) - s.old_logprobs[t]);
    if (!std::isfinite(ratio)) throw NonFiniteLoss("policy", "non-finite probability ratio at token " + std::to_string(t));
    const double adv = s.advantages[t];
    const double w = s.weights[t];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - coef.clip_eps, 1.0 + coef.clip_eps) * adv;
    surrogate += w * std::min(unclipped, clipped);

    const RowVec p = lp.row(row).array().exp();
    const PositionStats st = position_stats(lp.row(row), lq.row(row));
    ent += st.entropy;
    kl += st.kl;
    reg += -coef.beta_ent * st.entropy + coef.beta_kl * st.kl;

    const double v = out.values(first + row);
    const double err = s.reward.value - v;
    sq_err += err * err;

    if (!grad.empty()) {
      // d/dlogits of -scale * w * min(...): only the unclipped branch carries gradient.
      RowVec d = RowVec::Zero(p.size());
      if (unclipped <= clipped) {
        d = -p * (w * ratio * adv * -scale);
        d(a) += w * ratio * adv * -scale;
      }
      // entropy bonus and KL to the reference
      const double reg_scale = coef.k2 * scale * inv_t;
      const RowVec dent = p.array() * (lp.row(row).array() + st.entropy);
      const RowVec dkl = p.array() * ((lp.row(row) - lq.row(row)).array() - st.kl);
      d += reg_scale * (coef.beta_ent * dent + coef.beta_kl * dkl);
      dlogits.row(first + row) = d;
      dvalues(first + row) = coef.k1 * scale * -2.0 * err;
    }
  }
  b.policy = -scale * surrogate;
  b.value = scale * sq_err;
  b.reg = scale * inv_t * reg;
  b.entropy = scale * inv_t * ent;
  b.kl_ref = scale * inv_t * kl;
  b.total = total_loss(b.policy, b.value, b.reg, coef.k1, coef.k2);
  require_finite(b.policy, "policy");
  require_finite(b.value, "value");
  require_finite(b.reg, "reg");
  if (!grad.empty()) backward(params, trace, dlogits, dvalues, grad);
  return b;
}

LossBreakdown loss_and_gradients(const PolicyParams& params, const PolicyParams& reference,
                                 std::span<const RolloutSample* const> minibatch, const LossCoefficients& coef,
                                 std::vector<double>& grad, int workers, const SampleObjective& objective) {
  const std::size_t n = params.size();
  grad.assign(n, 0.0);
  if (minibatch.empty()) return {};
  const double scale = 1.0 / static_cast<double>(minibatch.size());
  std::vector<std::vector<double>> per_sample(minibatch.size());
  std::vector<LossBreakdown> parts(minibatch.size());
  parallel_for(minibatch.size(), workers, [&](std::size_t i) {
    per_sample[i].assign(n, 0.0);
    parts[i] = objective(params, reference, *minibatch[i], scale, coef, per_sample[i]);
  });
  LossBreakdown b;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    b.policy += parts[i].policy;
    b.value += parts[i].value;
    b.reg += parts[i].reg;
    b.entropy += parts[i].entropy;
    b.kl_ref += parts[i].kl_ref;
    const auto& g = per_sample[i];
    for (std::size_t k = 0; k < n; ++k) grad[k] += g[k];
  }
  b.total = total_loss(b.policy, b.value, b.reg, coef.k1, coef.k2);
  require_finite(b.total, "total");
  return b;
}

// ---------------------------------------------------------------------------
// Supervised stages

double cross_entropy_and_gradients(const PolicyParams& params, std::span<const SftPair* const> pairs,
                                   std::vector<double>& grad, int workers) {
  const std::size_t n = params.size();
  grad.assign(n, 0.0);
  if (pairs.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  std::vector<std::vector<double>> per_sample(pairs.size());
  std::vector<double> losses(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    const SftPair& pair = *pairs[i];
    ForwardTrace trace;
    ForwardOutput out;
    const Mat lp = completion_logprobs(params, pair.prompt, pair.completion, &out, &trace);
    const Eigen::Index first = static_cast<Eigen::Index>(pair.prompt.size() - 1);
    Mat dlogits = Mat::Zero(out.logits.rows(), out.logits.cols());
    double loss = 0.0;
    for (std::size_t t = 0; t < pair.completion.size(); ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      const Token a = pair.completion[t];
      loss -= lp(row, a);
      dlogits.row(first + row) = lp.row(row).array().exp() * scale;
      dlogits(first + row, a) -= scale;
    }
    per_sample[i].assign(n, 0.0);
    backward(params, trace, dlogits, Vec::Zero(out.values.size()), per_sample[i]);
    losses[i] = loss * scale;
  });
  double loss = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    loss += losses[i];
    for (std::size_t k = 0; k < n; ++k) grad[k] += per_sample[i][k];
  }
  require_finite(loss, "cross_entropy");
  return loss;
}

void PretrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("pretrain.steps must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("pretrain.batch_size must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("pretrain.lr must be >= 0");
}

PretrainResult grammar_pretrain(PolicyParams& params, std::span<const Task> tasks, const PretrainConfig& cfg,
                                const AdamConfig& adam, std::uint64_t seed, int workers) {
  if (tasks.empty()) throw std::invalid_argument("grammar_pretrain needs at least one task");
  const auto& plans = enumerate_plans();
  const AdamConfig opt = with_lr(adam, cfg.lr);
  AdamState state;
  PretrainResult result;
  std::vector<double> grad;
  for (int step = 0; step < cfg.steps; ++step) {
    Rng rng = make_stream(seed, {kTagPretrain, static_cast<std::uint64_t>(step)});
    std::vector<SftPair> pairs;
    pairs.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) {
      const Task& task = tasks[uniform_index(rng, tasks.size())];
      pairs.push_back({encode_prompt(task), tokenize_plan(plans[uniform_index(rng, plans.size())])});
    }
    std::vector<const SftPair*> ptrs;
    for (const auto& p : pairs) ptrs.push_back(&p);
    const double loss = cross_entropy_and_gradients(params, ptrs, grad, workers);
    apply_update(params, grad, state, opt);
    result.losses.push_back(loss);
    result.final_loss = loss;
  }
  return result;
}

double parse_success_rate(const PolicyParams& params, std::span<const Task> tasks, int workers) {
  if (tasks.empty()) return 0.0;
  std::vector<char> ok(tasks.size(), 0);
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    Rng unused(0);
    const Completion c = sample_completion(params, encode_prompt(tasks[i]), {.greedy = true}, unused);
    ok[i] = parse_plan(c.tokens).ok();
  });
  return static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(tasks.size());
}

void RejectSamplingConfig::validate() const {
  if (completions_per_task < 1) throw std::invalid_argument("reject.completions_per_task must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("reject.temperature must be > 0");
  if (max_rounds < 0) throw std::invalid_argument("reject.max_rounds must be >= 0");
  if (!(min_improvement >= 0.0)) throw std::invalid_argument("reject.min_improvement must be >= 0");
  if (sft_epochs < 0) throw std::invalid_argument("reject.sft_epochs must be >= 0");
  if (minibatch_size < 1) throw std::invalid_argument("reject.minibatch_size must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("reject.lr must be >= 0");
}

namespace {

double greedy_completion_rate(const PolicyParams& params, std::span<const Task> tasks, const Scorer& scorer,
                              int workers) {
  std::vector<char> done(tasks.size(), 0), feasible(tasks.size(), 0);
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    feasible[i] = tasks[i].feasible;
    if (!tasks[i].feasible) return;
    Rng unused(0);
    const Completion c = sample_completion(params, encode_prompt(tasks[i]), {.greedy = true}, unused);
    done[i] = scorer.score(tasks[i], c.tokens).branch == RewardBranch::Satisfied;
  });
  const auto n_feasible = std::count(feasible.begin(), feasible.end(), 1);
  if (n_feasible == 0) return 0.0;
  return static_cast<double>(std::count(done.begin(), done.end(), 1)) / static_cast<double>(n_feasible);
}

}  // namespace

RejectRoundResult reject_sampling_round(PolicyParams& params, std::span<const Task> tasks,
                                        std::span<const Task> heldout, const RejectSamplingConfig& cfg,
                                        const Scorer& scorer, const AdamConfig& adam, std::uint64_t seed, int round,
                                        int workers, double previous_success_rate) {
  struct Best {
    bool found = false;
    double reward = 0.0;
    SftPair pair;
  };
  std::vector<Best> best(tasks.size());
  const SamplingOptions opts{.temperature = cfg.temperature};
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    const TokenSeq prompt = encode_prompt(task);
    Decoder dec(params);
    RowVec logits;
    for (Token t : prompt) logits = dec.push(t);
    for (int g = 0; g < cfg.completions_per_task; ++g) {
      Rng rng = make_stream(seed, {kTagReject, static_cast<std::uint64_t>(round), i, static_cast<std::uint64_t>(g)});
      const Completion c = sample_from(dec, logits, opts, rng);
      const RewardValue r = scorer.score(task, c.tokens);
      if (r.branch == RewardBranch::Satisfied && (!best[i].found || r.value > best[i].reward)) {
        best[i] = {true, r.value, {prompt, c.tokens}};
      }
    }
  });

  std::vector<SftPair> retained;
  std::set<std::vector<Token>> seen;
  for (const auto& b : best) {
    if (!b.found) continue;
    std::vector<Token> key = b.pair.prompt;
    key.insert(key.end(), b.pair.completion.begin(), b.pair.completion.end());
    if (seen.insert(std::move(key)).second) retained.push_back(b.pair);
  }

  RejectRoundResult result;
  result.retained = retained.size();
  if (retained.empty()) {
    result.no_op = true;
    result.success_rate = previous_success_rate;
    return result;
  }

  const AdamConfig opt = with_lr(adam, cfg.lr);
  AdamState state;
  std::vector<double> grad;
  const auto mb = static_cast<std::size_t>(cfg.minibatch_size);
  for (int epoch = 0; epoch < cfg.sft_epochs; ++epoch) {
    Rng rng = make_stream(seed, {kTagSft, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(epoch)});
    const auto order = permutation(retained.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      std::vector<const SftPair*> ptrs;
      for (std::size_t k = start; k < std::min(order.size(), start + mb); ++k) ptrs.push_back(&retained[order[k]]);
      cross_entropy_and_gradients(params, ptrs, grad, workers);
      apply_update(params, grad, state, opt);
    }
  }
  result.success_rate = greedy_completion_rate(params, heldout, scorer, workers);
  return result;
}

RejectSamplingHistory run_reject_sampling(PolicyParams& params, std::span<const Task> tasks,
                                          std::span<const Task> heldout, const RejectSamplingConfig& cfg,
                                          const Scorer& scorer, const AdamConfig& adam, std::uint64_t seed,
                                          int workers) {
  RejectSamplingHistory history;
  history.initial_success_rate = greedy_completion_rate(params, heldout, scorer, workers);
  double current = history.initial_success_rate;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    PolicyParams backup = clone_params(params);
    const RejectRoundResult r =
        reject_sampling_round(params, tasks, heldout, cfg, scorer, adam, seed, round, workers, current);
    history.rounds.push_back(r);
    if (r.no_op) break;
    if (r.success_rate < current) {
      params = std::move(backup);
      break;
    }
    ++history.accepted_rounds;
    const double gain = r.success_rate - current;
    current = r.success_rate;
    if (gain < cfg.min_improvement) break;
  }
  return history;
}

// ---------------------------------------------------------------------------
// RL

void RLConfig::validate() const {
  if (!(loss.clip_eps > 0.0 && loss.clip_eps < 1.0)) throw std::invalid_argument("rl.clip_eps must lie in (0, 1)");
  for (double c : {loss.beta_ent, loss.beta_kl, loss.k1, loss.k2})
    if (!(c >= 0.0)) throw std::invalid_argument("rl loss coefficients must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("rl.batch_size must be >= 1");
  if (ppo_epochs < 1) throw std::invalid_argument("rl.ppo_epochs must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("rl.minibatch_size must be >= 1");
  if (reference_interval < 1) throw std::invalid_argument("rl.reference_interval must be >= 1");
  if (total_steps < 0) throw std::invalid_argument("rl.total_steps must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("rl.temperature must be > 0");
  if (!(lr >= 0.0)) throw std::invalid_argument("rl.lr must be >= 0");
}

RlState init_rl_state(const PolicyParams& initial) {
  RlState s;
  s.params = clone_params(initial);
  s.reference = clone_params(initial);
  return s;
}

RolloutBatch collect_rollouts(const PolicyParams& params, std::span<const Task> tasks, const RlContext& ctx,
                              std::uint64_t step) {
  RolloutBatch batch;
  batch.samples.resize(tasks.size());
  const SamplingOptions opts{.temperature = ctx.rl.temperature};
  parallel_for(tasks.size(), ctx.workers, [&](std::size_t i) {
    RolloutSample& s = batch.samples[i];
    s.task = tasks[i];
    s.prompt = encode_prompt(s.task);
    Rng rng = make_stream(ctx.seed, {kTagRollout, step, i});
    Completion c = sample_completion(params, s.prompt, opts, rng);
    s.completion = std::move(c.tokens);
    s.old_logprobs = std::move(c.logprobs);
    s.reward = ctx.scorer.score(s.task, s.completion);
    const ForwardOutput out = forward(params, scoring_input(s.prompt, s.completion));
    const std::size_t first = s.prompt.size() - 1;
    s.values.resize(s.completion.size());
    s.advantages.resize(s.completion.size());
    for (std::size_t t = 0; t < s.completion.size(); ++t) {
      s.values[t] = out.values(static_cast<Eigen::Index>(first + t));
      s.advantages[t] = s.reward.value - s.values[t];
    }
    if (i % static_cast<std::size_t>(ctx.sensitivity.stride) == 0) {
      const std::uint64_t stream = mix_seed(ctx.seed, {kTagSensitivity, step, s.task.id, i});
      const auto profile = estimate_sensitivity(ctx.scorer, s.task, s.completion, s.reward.value, ctx.sensitivity, stream);
      s.weights = token_weights(profile, ctx.sensitivity);
    } else {
      s.weights.assign(s.completion.size(), 1.0);
    }
  });
  return batch;
}

StepMetrics rl_step(RlState& state, std::span<const Task> tasks, const RlContext& ctx) {
  if (tasks.empty()) throw std::invalid_argument("rl_step needs training tasks");
  const std::uint64_t step = state.step;
  const auto batch_size = static_cast<std::size_t>(ctx.rl.batch_size);

  Rng pick = make_stream(ctx.seed, {kTagBatch, step});
  std::vector<Task> chosen;
  chosen.reserve(batch_size);
  if (tasks.size() >= batch_size) {
    // partial Fisher-Yates: distinct tasks
    std::vector<std::size_t> idx(tasks.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::swap(idx[i], idx[i + uniform_index(pick, tasks.size() - i)]);
      chosen.push_back(tasks[idx[i]]);
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) chosen.push_back(tasks[uniform_index(pick, tasks.size())]);
  }

  const RolloutBatch batch = collect_rollouts(state.params, chosen, ctx, step);

  StepMetrics m;
  m.step = step;
  std::size_t satisfied = 0, parsed = 0;
  for (const auto& s : batch.samples) {
    m.mean_reward += s.reward.value;
    satisfied += s.reward.branch == RewardBranch::Satisfied;
    parsed += s.reward.branch != RewardBranch::Invalid;
  }
  m.mean_reward /= static_cast<double>(batch.size());
  m.completion_rate = static_cast<double>(satisfied) / static_cast<double>(batch.size());
  m.parse_rate = static_cast<double>(parsed) / static_cast<double>(batch.size());

  const AdamConfig opt = with_lr(ctx.adam, ctx.rl.lr);
  const auto mb = static_cast<std::size_t>(ctx.rl.minibatch_size);
  std::vector<double> grad;
  std::size_t updates = 0;
  for (int epoch = 0; epoch < ctx.rl.ppo_epochs; ++epoch) {
    Rng shuffle = make_stream(ctx.seed, {kTagShuffle, step, static_cast<std::uint64_t>(epoch)});
    const auto order = permutation(batch.size(), shuffle);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      std::vector<const RolloutSample*> ptrs;
      for (std::size_t k = start; k < std::min(order.size(), start + mb); ++k) ptrs.push_back(&batch.samples[order[k]]);
      const LossBreakdown b =
          loss_and_gradients(state.params, state.reference, ptrs, ctx.rl.loss, grad, ctx.workers, ctx.objective);
      apply_update(state.params, grad, state.adam, opt);
      ++state.optimizer_steps;
      if (state.optimizer_steps % static_cast<std::uint64_t>(ctx.rl.reference_interval) == 0) {
        state.reference = clone_params(state.params);
        ++state.ref_version;
      }
      m.policy_loss += b.policy;
      m.value_loss += b.value;
      m.reg_loss += b.reg;
      m.total_loss += b.total;
      m.entropy += b.entropy;
      m.kl_ref += b.kl_ref;
      ++updates;
    }
  }
  const double inv = 1.0 / static_cast<double>(updates);
  m.policy_loss *= inv;
  m.value_loss *= inv;
  m.reg_loss *= inv;
  m.total_loss *= inv;
  m.entropy *= inv;
  m.kl_ref *= inv;
  m.ref_version = state.ref_version;
  ++state.step;
  return m;
}

}  // namespace rldtf
