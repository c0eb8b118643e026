#include <doctest.h>

#include <cmath>

#include "control_ppo.hpp"
#include "rldtf/task_model.hpp"
#include "support.hpp"

using namespace rldtf;
using namespace rldtf::testing;

namespace {

std::vector<const RolloutSample*> pointers(const std::vector<RolloutSample>& v) {
  std::vector<const RolloutSample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

std::vector<RolloutSample> micro_batch(const PolicyParams& p, std::size_t n, std::uint64_t seed) {
  const auto tasks = generate_tasks(seed, n, TaskGenConfig{});
  std::vector<RolloutSample> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_sample(p, tasks[i], seed * 100 + i, uniform(rng, -1.5, 1.0)));
  return out;
}

// Largest FD disagreement (relative, with an absolute floor) over `count` params.
double fd_check(PolicyParams& p, const PolicyParams& ref, const std::vector<RolloutSample>& batch,
                const LossCoefficients& coef, std::size_t count, std::uint64_t seed) {
  const auto ptrs = pointers(batch);
  std::vector<double> grad;
  loss_and_gradients(p, ref, ptrs, coef, grad, 1);
  std::vector<double> scratch;
  auto loss = [&] { return loss_and_gradients(p, ref, ptrs, coef, scratch, 1).total; };
  Rng rng(seed);
  double worst = 0.0;
  const double h = 1e-4;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = uniform_index(rng, p.size());
    const double orig = p.data[i];
    p.data[i] = orig + h;
    const double up = loss();
    p.data[i] = orig - h;
    const double down = loss();
    p.data[i] = orig;
    const double fd = (up - down) / (2 * h);
    const double err = fd_error(fd, grad[i]);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

TEST_CASE("clipped surrogate hand examples") {
  const double eps = 0.2;
  CHECK(-weighted_surrogate_sum(std::vector{0.0}, std::vector{0.0}, std::vector{0.5}, std::vector{1.0}, eps) == -0.5);
  CHECK(-weighted_surrogate_sum(std::vector{std::log(1.5)}, std::vector{0.0}, std::vector{1.0}, std::vector{1.0},
                                eps) == doctest::Approx(-1.2).epsilon(1e-14));
  CHECK(-weighted_surrogate_sum(std::vector{std::log(0.5)}, std::vector{0.0}, std::vector{-1.0}, std::vector{1.0},
                                eps) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(clipped_surrogate(1.0, 0.5, eps) == 0.5);
}

TEST_CASE("non-finite ratio is reported as a policy-term error") {
  const double inf = std::numeric_limits<double>::infinity();
  try {
    weighted_surrogate_sum(std::vector{0.0}, std::vector{-inf}, std::vector{1.0}, std::vector{1.0}, 0.2);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.term() == "policy");
  }
}

TEST_CASE("value loss examples") {
  CHECK(sequence_value_error(1.0, std::vector{0.5, 0.75}) == 0.3125);
  CHECK(sequence_value_error(0.3, std::vector{0.3, 0.3}) == 0.0);

  PolicyParams p = randomized_params(micro_config(), 3);
  p.tensor("value.w").setZero();
  p.tensor("value.b").setConstant(0.25);
  auto batch = micro_batch(p, 3, 5);
  for (auto& s : batch) s.reward.value = 0.25;
  CHECK(value_loss({batch}, p) == 0.0);
  for (auto& s : batch) s.reward.value = 1.25;
  double expected = 0.0;
  for (const auto& s : batch) expected += static_cast<double>(s.completion.size());
  CHECK(value_loss({batch}, p) == doctest::Approx(expected / 3.0).epsilon(1e-14));
}

TEST_CASE("reg loss examples") {
  const PolicyParams uniform = init_params(micro_config(), 1);
  const auto batch = micro_batch(randomized_params(micro_config(), 2), 4, 9);
  CHECK(reg_loss({batch}, uniform, uniform, 0.01, 0.0) == doctest::Approx(-0.01 * std::log(87.0)).epsilon(1e-12));
  CHECK(reg_loss({batch}, uniform, uniform, 0.0, 0.05) == 0.0);

  PolicyParams onehot = init_params(micro_config(), 1);
  onehot.tensor("lm.b")(0, 5) = 1e4;
  CHECK(std::abs(reg_loss({batch}, onehot, onehot, 0.01, 0.0)) < 1e-12);

  const PolicyParams other = randomized_params(micro_config(), 4);
  CHECK(reg_loss({batch}, other, uniform, 0.0, 1.0) > 0.0);
}

TEST_CASE("total loss arithmetic") {
  CHECK(total_loss(-0.5, 0.3125, 0.1, 0.5, 1.0) == doctest::Approx(-0.24375).epsilon(1e-15));
  CHECK(total_loss(-0.5, 0.3125, 0.1, 0.0, 0.0) == -0.5);
  CHECK(total_loss(0.0, 0.0, 0.0, 0.5, 1.0) == 0.0);
}

TEST_CASE("policy loss at the rollout snapshot is -mean sum w A") {
  const PolicyParams p = randomized_params(micro_config(), 6);
  auto batch = micro_batch(p, 4, 2);
  double expected = 0.0;
  for (auto& s : batch) {
    const Mat lp = log_softmax(forward(p, scoring_input(s.prompt, s.completion))
                                   .logits.middleRows(static_cast<Eigen::Index>(s.prompt.size() - 1),
                                                      static_cast<Eigen::Index>(s.completion.size())));
    for (std::size_t t = 0; t < s.completion.size(); ++t) {
      s.old_logprobs[t] = lp(static_cast<Eigen::Index>(t), s.completion[t]);
      expected += s.weights[t] * s.advantages[t];
    }
  }
  CHECK(policy_loss({batch}, p, 0.2) == doctest::Approx(-expected / 4.0).epsilon(1e-12));
}

TEST_CASE("objective breakdown agrees with the batch loss functions") {
  const PolicyParams p = randomized_params(micro_config(), 7);
  const PolicyParams ref = randomized_params(micro_config(), 8);
  const auto batch = micro_batch(p, 5, 3);
  std::vector<double> grad;
  const LossCoefficients coef;
  const LossBreakdown b = loss_and_gradients(p, ref, pointers(batch), coef, grad, 1);
  CHECK(b.policy == doctest::Approx(policy_loss({batch}, p, coef.clip_eps)).epsilon(1e-12));
  CHECK(b.value == doctest::Approx(value_loss({batch}, p)).epsilon(1e-12));
  CHECK(b.reg == doctest::Approx(reg_loss({batch}, p, ref, coef.beta_ent, coef.beta_kl)).epsilon(1e-12));
  CHECK(b.total == doctest::Approx(total_loss(b.policy, b.value, b.reg, coef.k1, coef.k2)).epsilon(1e-15));
}

TEST_CASE("loss gradients match central differences") {
  for (bool split : {false, true}) {
    PolicyParams p = randomized_params(micro_config(split), 11);
    const PolicyParams ref = randomized_params(micro_config(split), 12);
    auto batch = micro_batch(p, 3, 4);
    auto zero_adv = batch;
    for (auto& s : zero_adv) std::fill(s.advantages.begin(), s.advantages.end(), 0.0);
    LossCoefficients policy_only{0.2, 0.0, 0.0, 0.0, 0.0};
    LossCoefficients value_only{0.2, 0.0, 0.0, 1.0, 0.0};
    LossCoefficients reg_only{0.2, 0.3, 0.7, 0.0, 1.0};
    LossCoefficients all{0.2, 0.01, 0.05, 0.5, 1.0};
    CHECK(fd_check(p, ref, batch, policy_only, 150, 1) < 1e-4);
    CHECK(fd_check(p, ref, zero_adv, value_only, 150, 2) < 1e-4);
    CHECK(fd_check(p, ref, zero_adv, reg_only, 150, 3) < 1e-4);
    CHECK(fd_check(p, ref, batch, all, 150, 4) < 1e-4);
  }
}

TEST_CASE("gradient linearity and zero cases") {
  const PolicyParams p = randomized_params(micro_config(), 13);
  auto batch = micro_batch(p, 3, 6);
  for (auto& s : batch) std::fill(s.advantages.begin(), s.advantages.end(), 0.0);
  std::vector<double> g0, g1, g2;
  loss_and_gradients(p, p, pointers(batch), {0.2, 0.0, 0.0, 0.0, 1.0}, g0, 1);
  for (double g : g0) CHECK(g == 0.0);
  loss_and_gradients(p, p, pointers(batch), {0.2, 0.0, 0.0, 0.5, 1.0}, g1, 1);
  loss_and_gradients(p, p, pointers(batch), {0.2, 0.0, 0.0, 1.0, 1.0}, g2, 1);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("ratio-one gradient equals REINFORCE with baseline") {
  const PolicyParams p = randomized_params(micro_config(), 14);
  auto batch = micro_batch(p, 3, 7);
  for (auto& s : batch) {
    const Mat lp = log_softmax(forward(p, scoring_input(s.prompt, s.completion))
                                   .logits.middleRows(static_cast<Eigen::Index>(s.prompt.size() - 1),
                                                      static_cast<Eigen::Index>(s.completion.size())));
    for (std::size_t t = 0; t < s.completion.size(); ++t) s.old_logprobs[t] = lp(static_cast<Eigen::Index>(t), s.completion[t]);
  }
  std::vector<double> ppo;
  loss_and_gradients(p, p, pointers(batch), {0.2, 0.0, 0.0, 0.0, 0.0}, ppo, 1);
  // -scale * sum_t w A d log pi / d logits = -scale * w A (onehot - p)
  std::vector<double> reinforce(p.size(), 0.0);
  const double scale = 1.0 / 3.0;
  for (const auto& s : batch) {
    ForwardTrace trace;
    const ForwardOutput out = forward(p, scoring_input(s.prompt, s.completion), &trace);
    const Mat lp = log_softmax(out.logits);
    Mat d = Mat::Zero(out.logits.rows(), out.logits.cols());
    for (std::size_t t = 0; t < s.completion.size(); ++t) {
      const auto row = static_cast<Eigen::Index>(s.prompt.size() - 1 + t);
      const double c = -scale * s.weights[t] * s.advantages[t];
      d.row(row) = -c * lp.row(row).array().exp();
      d(row, s.completion[t]) += c;
    }
    backward(p, trace, d, Vec::Zero(out.values.size()), reinforce);
  }
  double peak = 0.0;
  for (double g : reinforce) peak = std::max(peak, std::abs(g));
  REQUIRE(peak > 0.0);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(ppo[i] - reinforce[i]) > 1e-10 * peak) ++bad;
  CHECK(bad == 0);
}

TEST_CASE("alpha = 0 objective equals the unweighted control bit for bit") {
  const PolicyParams p = randomized_params(micro_config(), 15);
  const PolicyParams ref = randomized_params(micro_config(), 16);
  auto batch = micro_batch(p, 4, 8);
  for (auto& s : batch) std::fill(s.weights.begin(), s.weights.end(), 1.0);
  std::vector<double> ga, gb;
  const LossBreakdown a = loss_and_gradients(p, ref, pointers(batch), {}, ga, 1);
  const LossBreakdown b = loss_and_gradients(p, ref, pointers(batch), {}, gb, 1, unweighted_ppo_objective);
  CHECK(a.total == b.total);
  CHECK(ga == gb);
}

TEST_CASE("gradient reduction is independent of worker count") {
  const PolicyParams p = randomized_params(micro_config(), 17);
  const auto batch = micro_batch(p, 6, 9);
  std::vector<double> g1, g3;
  const LossBreakdown a = loss_and_gradients(p, p, pointers(batch), {}, g1, 1);
  const LossBreakdown b = loss_and_gradients(p, p, pointers(batch), {}, g3, 3);
  CHECK(a.total == b.total);
  CHECK(g1 == g3);
}

namespace {
RlContext micro_context(double lr, double alpha = 1.0) {
  RlContext ctx;
  ctx.rl.batch_size = 8;
  ctx.rl.minibatch_size = 4;
  ctx.rl.ppo_epochs = 2;
  ctx.rl.reference_interval = 3;
  ctx.rl.lr = lr;
  ctx.sensitivity.alpha = alpha;
  ctx.seed = 42;
  return ctx;
}
}  // namespace

TEST_CASE("rollouts: reward bounds, advantage identity, determinism") {
  const PolicyParams p = randomized_params(ModelConfig{}, 18, 0.05);
  const auto tasks = generate_tasks(10, 16, TaskGenConfig{});
  const RlContext ctx = micro_context(3e-4);
  const RolloutBatch a = collect_rollouts(p, tasks, ctx, 0);
  const RolloutBatch b = collect_rollouts(p, tasks, ctx, 0);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& s = a.samples[i];
    CHECK(s.reward.value >= -1.5);
    CHECK(s.reward.value <= 1.0);
    for (std::size_t t = 0; t < s.completion.size(); ++t) CHECK(s.advantages[t] == s.reward.value - s.values[t]);
    for (double w : s.weights) CHECK(w >= 1.0);
    CHECK(s.completion == b.samples[i].completion);
    CHECK(s.weights == b.samples[i].weights);
  }
}

TEST_CASE("rl_step: lr 0 keeps parameters, reference schedule, worker independence") {
  const auto tasks = generate_tasks(10, 40, TaskGenConfig{});
  const PolicyParams init = randomized_params(micro_config(), 19, 0.05);

  SUBCASE("lr 0") {
    RlState s = init_rl_state(init);
    const RlContext ctx = micro_context(0.0);
    rl_step(s, tasks, ctx);
    rl_step(s, tasks, ctx);
    CHECK(s.params.data == init.data);
    const RolloutBatch r1 = collect_rollouts(s.params, tasks, ctx, 7);
    const RolloutBatch r2 = collect_rollouts(init, tasks, ctx, 7);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.samples[i].completion == r2.samples[i].completion);
  }
  SUBCASE("reference refresh every C optimizer steps") {
    RlState s = init_rl_state(init);
    const RlContext ctx = micro_context(1e-3);
    for (int step = 0; step < 4; ++step) {
      const StepMetrics m = rl_step(s, tasks, ctx);
      CHECK(s.optimizer_steps == static_cast<std::uint64_t>(4 * (step + 1)));
      CHECK(m.ref_version == s.optimizer_steps / 3);
    }
    CHECK(s.reference.version == s.ref_version * 3 + init.version);
  }
  SUBCASE("same seed, different worker counts") {
    RlState a = init_rl_state(init), b = init_rl_state(init);
    RlContext ca = micro_context(1e-3), cb = micro_context(1e-3);
    cb.workers = 3;
    for (int step = 0; step < 2; ++step) {
      const StepMetrics ma = rl_step(a, tasks, ca);
      const StepMetrics mb = rl_step(b, tasks, cb);
      CHECK(ma.total_loss == mb.total_loss);
      CHECK(ma.mean_reward == mb.mean_reward);
    }
    CHECK(a.params.data == b.params.data);
  }
  SUBCASE("alpha 0 equals the unweighted control") {
    RlState a = init_rl_state(init), b = init_rl_state(init);
    RlContext ca = micro_context(1e-3, 0.0), cb = micro_context(1e-3, 0.0);
    cb.objective = unweighted_ppo_objective;
    for (int step = 0; step < 3; ++step) CHECK(rl_step(a, tasks, ca).total_loss == rl_step(b, tasks, cb).total_loss);
    CHECK(a.params.data == b.params.data);
  }
}

TEST_CASE("grammar pretraining") {
  const auto tasks = generate_tasks(30, 50, TaskGenConfig{});
  PolicyParams p = init_params(micro_config(), 3);
  CHECK(parse_success_rate(p, tasks, 1) == 0.0);
  PretrainConfig cfg;
  cfg.steps = 30;
  cfg.batch_size = 8;
  cfg.lr = 1e-2;
  const PretrainResult r = grammar_pretrain(p, tasks, cfg, {}, 1, 1);
  REQUIRE(r.losses.size() == 30);
  CHECK(r.losses.back() < r.losses.front());
}

TEST_CASE("cross entropy on a fixed target approaches zero") {
  const auto tasks = generate_tasks(31, 1, TaskGenConfig{});
  PolicyParams p = init_params(micro_config(), 4);
  const SftPair pair{encode_prompt(tasks[0]), tokenize_plan(enumerate_plans()[123])};
  const SftPair* ptr = &pair;
  std::vector<double> grad;
  AdamState st;
  AdamConfig cfg;
  cfg.lr = 3e-2;
  double loss = 0.0;
  for (int i = 0; i < 300; ++i) {
    loss = cross_entropy_and_gradients(p, std::span<const SftPair* const>(&ptr, 1), grad, 1);
    apply_update(p, grad, st, cfg);
  }
  CHECK(loss < 0.05);
}

TEST_CASE("reject sampling with nothing to keep is a no-op") {
  TaskGenConfig gen;
  gen.feasible_fraction = 0.0;
  const auto tasks = generate_tasks(32, 10, gen);
  PolicyParams p = randomized_params(micro_config(), 5, 0.05);
  const auto before = p.data;
  RejectSamplingConfig cfg;
  cfg.completions_per_task = 2;
  const RejectRoundResult r = reject_sampling_round(p, tasks, tasks, cfg, Scorer{}, {}, 1, 0, 1, 0.25);
  CHECK(r.no_op);
  CHECK(r.retained == 0);
  CHECK(r.success_rate == 0.25);
  CHECK(p.data == before);
}

TEST_CASE("config validation") {
  RLConfig rl;
  rl.loss.clip_eps = 1.0;
  CHECK_THROWS_AS(rl.validate(), std::invalid_argument);
  rl = {};
  rl.loss.beta_kl = -1.0;
  CHECK_THROWS_AS(rl.validate(), std::invalid_argument);
  RejectSamplingConfig rj;
  rj.completions_per_task = 0;
  CHECK_THROWS_AS(rj.validate(), std::invalid_argument);
}
