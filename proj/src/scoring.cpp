#include "rldtf/scoring.hpp"

namespace rldtf {

RewardValue Scorer::score(const Task& task, std::span<const Token> completion) const {
  const ParseResult parsed = parse_plan(completion);
  if (!parsed) return invalid_plan_reward();
  return score_plan(task, parsed.plan());
}

RewardValue Scorer::score_plan(const Task& task, const OrchestrationPlan& plan) const {
  return compute_reward(simulate(plan, task.scenario, link), task.target, weights);
}

}  // namespace rldtf
