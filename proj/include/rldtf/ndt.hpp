#pragma once

#include <array>
#include <optional>

#include "rldtf/dsl.hpp"
#include "rldtf/reward.hpp"
#include "rldtf/types.hpp"

namespace rldtf {

// Closed-form link model. Defaults reproduce the reference twin.
struct LinkModelParams {
  double symbols_per_prb = 168000.0;  // 12 subcarriers x 14 symbols per 1 ms slot
  std::array<double, 5> coding_gain_db = {6.0, 4.0, 3.0, 2.0, 1.0};  // 1/3 .. 5/6
  double neural_gain_db = 2.0;
  double conventional_gain_db = 0.0;
  double d_base_ms = 1.0;
  double d_proc_conventional_ms = 0.2;
  double d_proc_neural_ms = 0.8;
  double d_rtt_ms = 4.0;
  double block_bits = 1000.0;
  double ber_floor = 1e-12;
  double ber_cap = 0.5;
  double ber_scale = 0.2;
  double ber_exponent = 1.5;

  // Throws std::invalid_argument naming the first non-positive field.
  void validate() const;
};

double effective_snr_db(const OrchestrationPlan& plan, const ScenarioConfig& scenario,
                        const LinkModelParams& params);

// Uncoded BER before retransmission combining.
double raw_ber(const OrchestrationPlan& plan, const ScenarioConfig& scenario, const LinkModelParams& params);

QosResult simulate(const OrchestrationPlan& plan, const ScenarioConfig& scenario,
                   const LinkModelParams& params = {});

// Largest throughput any plan reaches in this scenario.
double max_throughput(const ScenarioConfig& scenario, const LinkModelParams& params = {});

struct OracleResult {
  std::optional<OrchestrationPlan> best_plan;  // empty when no plan satisfies the target
  double best_reward = 0.0;                    // reward of best_plan; max violated reward otherwise
  std::size_t satisfying_plans = 0;

  bool feasible() const { return best_plan.has_value(); }
};

// Exhaustive search over all 9600 plans.
OracleResult oracle_best(const Task& task, const LinkModelParams& params, const RewardWeights& weights);

}  // namespace rldtf
