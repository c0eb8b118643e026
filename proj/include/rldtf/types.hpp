#pragma once

#include <cstdint>

namespace rldtf {

// Channel context the twin needs to score a plan.
struct ScenarioConfig {
  double snr_db = 0.0;  // [0, 32)
};

// QoS requirements carried by a task.
struct QosTarget {
  double del_max_ms = 0.0;   // > 0
  double thr_min_bps = 0.0;  // > 0
  double ber_max = 0.0;      // (0, 0.5]
};

struct Task {
  std::uint64_t id = 0;
  ScenarioConfig scenario;
  QosTarget target;
  bool feasible = false;
};

// Simulated (delay, throughput, BER) triple.
struct QosResult {
  double delay_ms = 0.0;
  double throughput_bps = 0.0;
  double ber = 0.0;
};

}  // namespace rldtf
