#pragma once

#include <span>

#include "rldtf/dsl.hpp"
#include "rldtf/ndt.hpp"
#include "rldtf/reward.hpp"
#include "rldtf/types.hpp"

namespace rldtf {

// Twin + reward bundle used wherever a completion gets scored.
struct Scorer {
  LinkModelParams link;
  RewardWeights weights;

  // parse -> simulate -> reward; unparseable completions get the invalid-plan reward.
  RewardValue score(const Task& task, std::span<const Token> completion) const;
  RewardValue score_plan(const Task& task, const OrchestrationPlan& plan) const;
};

}  // namespace rldtf
