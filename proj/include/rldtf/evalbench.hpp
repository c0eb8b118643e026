#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rldtf/io.hpp"
#include "rldtf/ndt.hpp"
#include "rldtf/policy.hpp"
#include "rldtf/scoring.hpp"

namespace rldtf {

// Something that emits one completion per task.
class PlanPolicy {
 public:
  virtual ~PlanPolicy() = default;
  virtual std::string name() const = 0;
  virtual TokenSeq decode(const Task& task) const = 0;
};

// One-shot greedy decoding.
class GreedyModelPolicy : public PlanPolicy {
 public:
  GreedyModelPolicy(std::string name, const PolicyParams& params) : name_(std::move(name)), params_(&params) {}
  std::string name() const override { return name_; }
  TokenSeq decode(const Task& task) const override;

 private:
  std::string name_;
  const PolicyParams* params_;
};

// Uniformly random valid plan; task id selects the stream.
class RandomValidPolicy : public PlanPolicy {
 public:
  explicit RandomValidPolicy(std::uint64_t seed, std::string name = "random-valid")
      : name_(std::move(name)), seed_(seed) {}
  std::string name() const override { return name_; }
  TokenSeq decode(const Task& task) const override;

 private:
  std::string name_;
  std::uint64_t seed_;
};

struct OracleEntry {
  std::optional<std::size_t> best_plan;  // index into enumerate_plans()
  double best_reward = 0.0;
  std::size_t satisfying_plans = 0;
};

// Exhaustive oracle results keyed by task id.
class OracleCache {
 public:
  void build(std::span<const Task> tasks, const Scorer& scorer, int workers);
  const OracleEntry& at(std::uint64_t id) const;
  bool contains(std::uint64_t id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }

  std::string to_jsonl() const;
  void save(const std::filesystem::path& path) const;
  static OracleCache load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::uint64_t, OracleEntry> entries_;
};

// Emits the oracle plan of each task (plan 0 when none satisfies).
class OraclePolicy : public PlanPolicy {
 public:
  explicit OraclePolicy(const OracleCache& cache) : cache_(&cache) {}
  std::string name() const override { return "oracle"; }
  TokenSeq decode(const Task& task) const override;

 private:
  const OracleCache* cache_;
};

struct EvalReport {
  std::string model;
  std::size_t n_tasks = 0;
  std::size_t n_feasible = 0;
  std::size_t n_completed = 0;  // feasible tasks whose decode satisfies the target
  std::size_t n_parse_failures = 0;
  double completion_rate = 0.0;  // over feasible tasks
  double completion_stderr = 0.0;
  std::optional<double> avg_score;       // completed tasks only
  std::optional<double> optimality_gap;  // mean oracle reward - achieved, completed tasks only
  double mean_reward = 0.0;              // feasible tasks, all branches
  // Infeasible tasks: how often the decode is at least a valid plan.
  std::size_t n_infeasible = 0;
  std::size_t n_infeasible_parsed = 0;
  double infeasible_mean_reward = 0.0;
  // Mean over feasible tasks of (satisfying plans / 9600).
  double expected_random_completion = 0.0;
  double expected_random_stderr = 0.0;
};

class OverlapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Scores policy.decode(task) for every task. Throws OverlapError when an
// eval task id appears in `train_ids`.
EvalReport evaluate(const PlanPolicy& policy, std::span<const Task> tasks, const Scorer& scorer,
                    const OracleCache& oracle, int workers, std::span<const std::uint64_t> train_ids = {});

json to_json(const EvalReport& r);

struct MetricDelta {
  std::string a, b, metric;
  std::optional<double> value_a, value_b;
  std::optional<double> delta;  // value_a - value_b
  std::string leader;           // variant that does better on this metric, "tie" or empty
};

struct Comparison {
  std::vector<EvalReport> reports;
  std::vector<MetricDelta> deltas;  // every ordered pair (i < j) and metric

  std::string table() const;
  std::string csv() const;
};

// Needs at least two reports.
Comparison compare(std::span<const EvalReport> reports);

}  // namespace rldtf
