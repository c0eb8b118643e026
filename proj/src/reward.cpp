#include "rldtf/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rldtf {

void RewardWeights::validate() const {
  for (double w : {w_thr_pos, w_del_pos, w_ber_pos, w_thr_neg, w_del_neg, w_ber_neg})
    if (!(w >= 0.0)) throw std::invalid_argument("reward weights must be non-negative");
  if (!(gap_floor > 0.0)) throw std::invalid_argument("reward.gap_floor must be positive");
  if (satisfied_floor > 1.0) throw std::invalid_argument("reward.satisfied_floor must not exceed 1");
  // sigmoid < 1, so the violated branch stays strictly below base_neg + sum(w-)
  if (!(satisfied_floor > base_neg + w_thr_neg + w_del_neg + w_ber_neg))
    throw std::invalid_argument("reward.satisfied_floor must exceed base_neg + sum of violated weights");
  if (!(base_neg > kInvalidPlanReward)) throw std::invalid_argument("reward.base_neg must exceed the invalid-plan reward");
}

std::string_view to_string(RewardBranch b) {
  switch (b) {
    case RewardBranch::Satisfied: return "satisfied";
    case RewardBranch::Violated: return "violated";
    case RewardBranch::Invalid: return "invalid";
  }
  return "unknown";
}

bool qos_satisfied(const QosResult& q, const QosTarget& t) {
  return q.throughput_bps >= t.thr_min_bps && q.delay_ms <= t.del_max_ms && q.ber <= t.ber_max;
}

NormalizedSlack normalized_slack(const QosResult& q, const QosTarget& t) {
  const double log_target = std::log10(t.ber_max);
  return NormalizedSlack{
      (q.throughput_bps - t.thr_min_bps) / t.thr_min_bps,
      (t.del_max_ms - q.delay_ms) / t.del_max_ms,
      (log_target - std::log10(q.ber)) / std::abs(log_target),
  };
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RewardValue compute_reward(const QosResult& q, const QosTarget& target, const RewardWeights& w) {
  const NormalizedSlack s = normalized_slack(q, target);
  if (qos_satisfied(q, target)) {
    const double r = w.base_pos - w.w_thr_pos * s.thr - w.w_del_pos * s.del - w.w_ber_pos * s.ber;
    return {std::clamp(r, w.satisfied_floor, 1.0), RewardBranch::Satisfied};
  }
  auto bonus = [&](double gap) { return sigmoid(1.0 / std::max(std::abs(gap), w.gap_floor)); };
  const double r = w.base_neg + w.w_thr_neg * bonus(s.thr) + w.w_del_neg * bonus(s.del) + w.w_ber_neg * bonus(s.ber);
  return {r, RewardBranch::Violated};
}

RewardValue invalid_plan_reward() { return {kInvalidPlanReward, RewardBranch::Invalid}; }

}  // namespace rldtf
