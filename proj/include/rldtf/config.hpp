#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "rldtf/io.hpp"
#include "rldtf/ndt.hpp"
#include "rldtf/policy.hpp"
#include "rldtf/reward.hpp"
#include "rldtf/sensitivity.hpp"
#include "rldtf/task_model.hpp"
#include "rldtf/trainer.hpp"

namespace rldtf {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Task set sizes. Ids of the three sets never overlap.
struct DataConfig {
  std::size_t train_tasks = 2000;
  std::size_t validation_tasks = 200;  // held out for reject-sampling success rates
};

struct EvalConfig {
  std::size_t feasible_tasks = 500;
  std::size_t infeasible_tasks = 125;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
  int workers = 1;

  ModelConfig model;
  LinkModelParams ndt;
  RewardWeights reward;
  RLConfig rl;
  RejectSamplingConfig reject;
  TaskGenConfig taskgen;  // taskgen.link mirrors ndt
  DataConfig data;
  EvalConfig eval;
  PretrainConfig pretrain;
  SensitivityConfig sensitivity;
  AdamConfig optimizer;  // betas and eps; learning rates are per stage

  void validate() const;
};

// Missing keys keep their defaults; unknown keys and wrong types throw
// ConfigError naming the dotted key.
RunConfig config_from_json(const json& j);
RunConfig load_config(const std::filesystem::path& path);
json to_json(const RunConfig& cfg);

}  // namespace rldtf
