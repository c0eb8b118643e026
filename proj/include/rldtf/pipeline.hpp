#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <vector>

#include "rldtf/config.hpp"
#include "rldtf/evalbench.hpp"
#include "rldtf/trainer.hpp"

namespace rldtf {

struct TaskSets {
  std::vector<Task> train;
  std::vector<Task> validation;
  std::vector<Task> eval;
};

// Train ids start at 0, validation at kValidationIdOffset, eval at
// kEvalIdOffset, so the three sets are disjoint by id.
inline constexpr std::uint64_t kValidationIdOffset = 1'000'000;
inline constexpr std::uint64_t kEvalIdOffset = 2'000'000;

TaskSets make_task_sets(const RunConfig& cfg);

struct EvalSummary {
  std::vector<EvalReport> reports;  // random-valid, grammar-pretrained, reject-sampled, rldtf (those available)
  Comparison comparison;
};

// Stage runner over one output directory. Each stage reads what the previous
// one wrote and writes its own artifacts atomically.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = nullptr);

  const RunConfig& config() const { return cfg_; }
  std::filesystem::path path(const std::string& name) const;
  std::filesystem::path checkpoint(const std::string& name) const;

  TaskSets gen_tasks();
  // Task sets from disk, or generated and written when absent.
  TaskSets load_tasks();

  PretrainResult pretrain();
  RejectSamplingHistory reject_sample();
  // Per-step metrics; objective defaults to the token-weighted loss.
  std::vector<StepMetrics> train_rl(const SampleObjective& objective = token_weighted_objective);
  EvalSummary eval();

  EvalSummary run_all();

 private:
  void note(const std::string& msg) const;

  RunConfig cfg_;
  std::ostream* log_;
};

}  // namespace rldtf
