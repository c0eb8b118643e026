#include "rldtf/task_model.hpp"

#include <algorithm>
#include <cmath>

namespace rldtf {

namespace {

constexpr double kThrBinLow = 1e4;
constexpr double kThrBinHigh = 1e9;
constexpr double kBerBinLow = 1e-12;

void check_range(double lo, double hi, const char* name) {
  if (!(lo <= hi)) throw std::invalid_argument(std::string("taskgen.") + name + " range is empty");
}

}  // namespace

void TaskGenConfig::validate() const {
  if (!(feasible_fraction >= 0.0 && feasible_fraction <= 1.0))
    throw std::invalid_argument("taskgen.feasible_fraction must lie in [0, 1]");
  check_range(thr_slack_lo, thr_slack_hi, "thr_slack");
  check_range(del_slack_lo, del_slack_hi, "del_slack");
  check_range(ber_decades_lo, ber_decades_hi, "ber_decades");
  if (!(thr_slack_lo > 0.0 && thr_slack_hi <= 1.0)) throw std::invalid_argument("taskgen.thr_slack must lie in (0, 1]");
  if (!(del_slack_lo >= 1.0)) throw std::invalid_argument("taskgen.del_slack_lo must be >= 1");
  if (!(ber_decades_lo >= 0.0)) throw std::invalid_argument("taskgen.ber_decades_lo must be >= 0");
  if (!(infeasible_thr_factor > 1.0)) throw std::invalid_argument("taskgen.infeasible_thr_factor must exceed 1");
  link.validate();
}

Task sample_task(Rng& rng, const TaskGenConfig& cfg, std::uint64_t id, OrchestrationPlan* anchor_out) {
  const auto& plans = enumerate_plans();
  Task task;
  task.id = id;
  task.feasible = bernoulli(rng, cfg.feasible_fraction);
  task.scenario.snr_db = uniform(rng, 0.0, 32.0);
  for (;;) {
    const auto& anchor = plans[uniform_index(rng, plans.size())];
    const QosResult q = simulate(anchor, task.scenario, cfg.link);
    const double u1 = uniform(rng, cfg.thr_slack_lo, cfg.thr_slack_hi);
    const double u2 = uniform(rng, cfg.del_slack_lo, cfg.del_slack_hi);
    const double u3 = uniform(rng, cfg.ber_decades_lo, cfg.ber_decades_hi);
    if (q.throughput_bps * cfg.thr_slack_lo < kThrBinLow) continue;
    task.target.thr_min_bps = q.throughput_bps * u1;
    task.target.del_max_ms = q.delay_ms * u2;
    task.target.ber_max = std::min(0.5, q.ber * std::pow(10.0, u3));
    if (anchor_out) *anchor_out = anchor;
    break;
  }
  if (!task.feasible) task.target.thr_min_bps = cfg.infeasible_thr_factor * max_throughput(task.scenario, cfg.link);
  return task;
}

std::vector<Task> generate_tasks(std::uint64_t seed, std::size_t count, const TaskGenConfig& cfg,
                                 std::uint64_t id_offset, std::vector<OrchestrationPlan>* anchors) {
  std::vector<Task> out;
  out.reserve(count);
  if (anchors) anchors->assign(count, OrchestrationPlan{});
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, {0x7A5C, i});
    out.push_back(sample_task(rng, cfg, id_offset + i, anchors ? &(*anchors)[i] : nullptr));
  }
  return out;
}

std::vector<Task> generate_tasks_with_quota(std::uint64_t seed, std::size_t feasible, std::size_t infeasible,
                                            const TaskGenConfig& cfg, std::uint64_t id_offset) {
  if (feasible > 0 && cfg.feasible_fraction <= 0.0) throw std::invalid_argument("feasible quota with feasible_fraction 0");
  if (infeasible > 0 && cfg.feasible_fraction >= 1.0)
    throw std::invalid_argument("infeasible quota with feasible_fraction 1");
  std::vector<Task> out;
  std::size_t nf = 0, ni = 0;
  for (std::uint64_t i = 0; nf < feasible || ni < infeasible; ++i) {
    Rng rng = make_stream(seed, {0x7A5C, i});
    Task t = sample_task(rng, cfg, id_offset + i);
    if (t.feasible && nf < feasible) {
      ++nf;
      out.push_back(t);
    } else if (!t.feasible && ni < infeasible) {
      ++ni;
      out.push_back(t);
    }
  }
  return out;
}

int snr_bin(double snr_db) {
  if (!(snr_db >= 0.0 && snr_db < 32.0)) throw EncodingError("snr_db", "snr_db outside [0, 32)");
  return std::min(15, static_cast<int>(std::floor(snr_db / 2.0)));
}

int thr_bin(double thr_bps) {
  if (!(thr_bps >= kThrBinLow && thr_bps < kThrBinHigh)) throw EncodingError("thr_min", "thr_min outside [1e4, 1e9) bps");
  const double x = (std::log10(thr_bps) - 4.0) / (5.0 / 16.0);
  return std::clamp(static_cast<int>(std::floor(x)), 0, 15);
}

int del_bin(double del_ms) {
  if (!(del_ms >= 1.0 && del_ms < 33.0)) throw EncodingError("del_max", "del_max outside [1, 33) ms");
  return std::min(7, static_cast<int>(std::floor((del_ms - 1.0) / 4.0)));
}

int ber_bin(double ber) {
  if (!(ber >= kBerBinLow && ber < 1.0)) throw EncodingError("ber_max", "ber_max outside [1e-12, 1)");
  const double x = (std::log10(ber) + 12.0) / 1.5;
  return std::clamp(static_cast<int>(std::floor(x)), 0, 7);
}

TokenSeq encode_prompt(const Task& task) {
  const auto& v = vocab();
  return {kBosTask,
          v.token_for(TokenClass::SnrBin, snr_bin(task.scenario.snr_db)),
          v.token_for(TokenClass::ThrBin, thr_bin(task.target.thr_min_bps)),
          v.token_for(TokenClass::DelBin, del_bin(task.target.del_max_ms)),
          v.token_for(TokenClass::BerBin, ber_bin(task.target.ber_max)),
          kSep};
}

}  // namespace rldtf
