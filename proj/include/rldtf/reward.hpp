#pragma once

#include <cstdint>
#include <string_view>

#include "rldtf/types.hpp"

namespace rldtf {

struct RewardWeights {
  // satisfied branch: throughput, delay, BER slack penalties
  double w_thr_pos = 0.2;
  double w_del_pos = 0.1;
  double w_ber_pos = 0.1;
  // violated branch: proximity bonus weights
  double w_thr_neg = 0.3;
  double w_del_neg = 0.3;
  double w_ber_neg = 0.3;
  double base_pos = 1.0;
  double base_neg = -1.0;
  double satisfied_floor = 0.05;
  double gap_floor = 1e-9;

  // Throws std::invalid_argument when the weights break the branch
  // ordering (satisfied-floor above every violated value) or are negative.
  void validate() const;
};

enum class RewardBranch : std::uint8_t { Satisfied, Violated, Invalid };

std::string_view to_string(RewardBranch b);

struct RewardValue {
  double value = 0.0;
  RewardBranch branch = RewardBranch::Invalid;
};

inline constexpr double kInvalidPlanReward = -1.5;

// Boundary equality counts as satisfied.
bool qos_satisfied(const QosResult& q, const QosTarget& target);

// Dimensionless relative slacks (positive = better than target).
struct NormalizedSlack {
  double thr = 0.0;
  double del = 0.0;
  double ber = 0.0;  // log10 domain
};

NormalizedSlack normalized_slack(const QosResult& q, const QosTarget& target);

RewardValue compute_reward(const QosResult& q, const QosTarget& target, const RewardWeights& weights = {});

RewardValue invalid_plan_reward();

double sigmoid(double x);

}  // namespace rldtf
