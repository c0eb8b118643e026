#include "rldtf/ndt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rldtf {

void LinkModelParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("ndt.") + name + " must be positive");
  };
  pos(symbols_per_prb, "symbols_per_prb");
  for (double g : coding_gain_db) pos(g, "coding_gain_db");
  pos(neural_gain_db, "neural_gain_db");
  if (conventional_gain_db < 0.0) throw std::invalid_argument("ndt.conventional_gain_db must be non-negative");
  pos(d_base_ms, "d_base_ms");
  pos(d_proc_conventional_ms, "d_proc_conventional_ms");
  pos(d_proc_neural_ms, "d_proc_neural_ms");
  pos(d_rtt_ms, "d_rtt_ms");
  pos(block_bits, "block_bits");
  pos(ber_floor, "ber_floor");
  pos(ber_cap, "ber_cap");
  pos(ber_scale, "ber_scale");
  pos(ber_exponent, "ber_exponent");
  if (ber_floor >= ber_cap) throw std::invalid_argument("ndt.ber_floor must be below ndt.ber_cap");
}

double effective_snr_db(const OrchestrationPlan& plan, const ScenarioConfig& scenario,
                        const LinkModelParams& params) {
  const double g_rx = plan.receiver == Receiver::Neural ? params.neural_gain_db : params.conventional_gain_db;
  const double g_code = params.coding_gain_db[static_cast<std::size_t>(plan.code_rate)];
  return scenario.snr_db - 10.0 * std::log10(static_cast<double>(plan.layers)) + g_rx + g_code;
}

double raw_ber(const OrchestrationPlan& plan, const ScenarioConfig& scenario, const LinkModelParams& params) {
  const double gamma_lin = std::pow(10.0, effective_snr_db(plan, scenario, params) / 10.0);
  const double m = std::ldexp(1.0, bits_per_symbol(plan.modulation));
  const double p = params.ber_scale * std::exp(-params.ber_exponent * gamma_lin / (m - 1.0));
  return std::clamp(p, params.ber_floor, params.ber_cap);
}

QosResult simulate(const OrchestrationPlan& plan, const ScenarioConfig& scenario, const LinkModelParams& params) {
  const double p = raw_ber(plan, scenario, params);
  const int attempts = plan.n_retx + 1;
  const double p_res = std::clamp(std::pow(p, attempts), params.ber_floor, params.ber_cap);

  // Block success probability q = (1-p)^N. The delivery probability
  // 1 - p_blk^(n+1) is evaluated as -expm1((n+1) log1p(-q)) so it stays
  // positive when p_blk rounds to 1.
  const double q = std::exp(params.block_bits * std::log1p(-p));
  const double p_blk = 1.0 - q;
  double e_tx = 0.0;
  double term = 1.0;
  for (int i = 0; i < attempts; ++i) {
    e_tx += term;
    term *= p_blk;
  }
  const double p_ok = -std::expm1(attempts * std::log1p(-q));

  const double bps = bits_per_symbol(plan.modulation);
  const double rate = code_rate_value(plan.code_rate);
  const double thr = plan.n_prb * params.symbols_per_prb * bps * rate * plan.layers * p_ok / e_tx;

  const double d_proc =
      plan.receiver == Receiver::Neural ? params.d_proc_neural_ms : params.d_proc_conventional_ms;
  const double delay = params.d_base_ms + d_proc + (e_tx - 1.0) * params.d_rtt_ms;
  return QosResult{delay, thr, p_res};
}

double max_throughput(const ScenarioConfig& scenario, const LinkModelParams& params) {
  double best = 0.0;
  for (const auto& plan : enumerate_plans()) best = std::max(best, simulate(plan, scenario, params).throughput_bps);
  return best;
}

OracleResult oracle_best(const Task& task, const LinkModelParams& params, const RewardWeights& weights) {
  OracleResult out;
  double best_violated = -1e300;
  for (const auto& plan : enumerate_plans()) {
    const QosResult q = simulate(plan, task.scenario, params);
    const RewardValue r = compute_reward(q, task.target, weights);
    if (r.branch == RewardBranch::Satisfied) {
      ++out.satisfying_plans;
      if (!out.best_plan || r.value > out.best_reward) {
        out.best_plan = plan;
        out.best_reward = r.value;
      }
    } else {
      best_violated = std::max(best_violated, r.value);
    }
  }
  if (!out.best_plan) out.best_reward = best_violated;
  return out;
}

}  // namespace rldtf
