#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rldtf/dsl.hpp"
#include "rldtf/ndt.hpp"
#include "rldtf/rng.hpp"
#include "rldtf/types.hpp"

namespace rldtf {

struct TaskGenConfig {
  double feasible_fraction = 0.8;
  // Relaxation factors applied to the anchor plan's simulated QoS.
  double thr_slack_lo = 0.5, thr_slack_hi = 0.95;
  double del_slack_lo = 1.05, del_slack_hi = 1.5;
  double ber_decades_lo = 0.5, ber_decades_hi = 2.0;
  double infeasible_thr_factor = 1.2;
  LinkModelParams link;

  void validate() const;
};

class EncodingError : public std::invalid_argument {
 public:
  EncodingError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Draws one task. Feasible tasks relax the QoS of a uniformly drawn anchor
// plan; infeasible ones demand more throughput than any plan can deliver.
// Anchors whose throughput would put thr_min below the lowest prompt bin are
// redrawn. The anchor is written to *anchor when given.
Task sample_task(Rng& rng, const TaskGenConfig& cfg, std::uint64_t id = 0, OrchestrationPlan* anchor = nullptr);

// Task i draws from stream (seed, i); ids are id_offset + i.
std::vector<Task> generate_tasks(std::uint64_t seed, std::size_t count, const TaskGenConfig& cfg,
                                 std::uint64_t id_offset = 0, std::vector<OrchestrationPlan>* anchors = nullptr);

// Draws tasks until both quotas are filled, keeping generator order.
std::vector<Task> generate_tasks_with_quota(std::uint64_t seed, std::size_t feasible, std::size_t infeasible,
                                            const TaskGenConfig& cfg, std::uint64_t id_offset = 0);

// Prompt bins.
int snr_bin(double snr_db);       // 16 x 2 dB over [0, 32)
int thr_bin(double thr_bps);      // 16 log10 bins over [1e4, 1e9)
int del_bin(double del_ms);       // 8 x 4 ms over [1, 33)
int ber_bin(double ber);          // 8 x 1.5 decades over [1e-12, 1)

// [BOS_TASK, SNR, THR, DEL, BER, SEP]; throws EncodingError naming the
// offending field when a value falls outside its bin range.
TokenSeq encode_prompt(const Task& task);

}  // namespace rldtf
