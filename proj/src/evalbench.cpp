#include "rldtf/evalbench.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "rldtf/parallel.hpp"
#include "rldtf/task_model.hpp"

namespace rldtf {

namespace {
constexpr std::uint64_t kTagRandomPolicy = 0x5256;
}

TokenSeq GreedyModelPolicy::decode(const Task& task) const {
  Rng unused(0);
  return sample_completion(*params_, encode_prompt(task), {.greedy = true}, unused).tokens;
}

TokenSeq RandomValidPolicy::decode(const Task& task) const {
  Rng rng = make_stream(seed_, {kTagRandomPolicy, task.id});
  const auto& plans = enumerate_plans();
  return tokenize_plan(plans[uniform_index(rng, plans.size())]);
}

TokenSeq OraclePolicy::decode(const Task& task) const {
  const OracleEntry& e = cache_->at(task.id);
  return tokenize_plan(enumerate_plans()[e.best_plan.value_or(0)]);
}

void OracleCache::build(std::span<const Task> tasks, const Scorer& scorer, int workers) {
  std::vector<OracleEntry> out(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const OracleResult r = oracle_best(tasks[i], scorer.link, scorer.weights);
    out[i].best_reward = r.best_reward;
    out[i].satisfying_plans = r.satisfying_plans;
    if (r.best_plan) out[i].best_plan = plan_index(*r.best_plan);
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) entries_[tasks[i].id] = out[i];
}

const OracleEntry& OracleCache::at(std::uint64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("no oracle entry for task " + std::to_string(id));
  return it->second;
}

std::string OracleCache::to_jsonl() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, e] : entries_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::string out;
  for (auto id : ids) {
    const auto& e = entries_.at(id);
    json j{{"id", id}, {"best_reward", e.best_reward}, {"satisfying_plans", e.satisfying_plans}};
    j["best_plan"] = e.best_plan ? json(*e.best_plan) : json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void OracleCache::save(const std::filesystem::path& path) const { write_file_atomic(path, to_jsonl()); }

OracleCache OracleCache::load(const std::filesystem::path& path) {
  OracleCache cache;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      OracleEntry e;
      e.best_reward = j.at("best_reward").get<double>();
      e.satisfying_plans = j.at("satisfying_plans").get<std::size_t>();
      if (!j.at("best_plan").is_null()) e.best_plan = j.at("best_plan").get<std::size_t>();
      cache.entries_[j.at("id").get<std::uint64_t>()] = e;
    } catch (const json::exception& ex) {
      throw IoError(path.string() + ": " + ex.what());
    }
  }
  return cache;
}

EvalReport evaluate(const PlanPolicy& policy, std::span<const Task> tasks, const Scorer& scorer,
                    const OracleCache& oracle, int workers, std::span<const std::uint64_t> train_ids) {
  if (!train_ids.empty()) {
    const std::unordered_set<std::uint64_t> train(train_ids.begin(), train_ids.end());
    for (const auto& t : tasks)
      if (train.count(t.id)) throw OverlapError("eval task " + std::to_string(t.id) + " also appears in training");
  }
  std::vector<RewardValue> rewards(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) { rewards[i] = scorer.score(tasks[i], policy.decode(tasks[i])); });

  EvalReport r;
  r.model = policy.name();
  r.n_tasks = tasks.size();
  double score_sum = 0.0, gap_sum = 0.0, reward_sum = 0.0, infeasible_sum = 0.0, p_sum = 0.0, var_sum = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const RewardValue& rv = rewards[i];
    if (rv.branch == RewardBranch::Invalid) ++r.n_parse_failures;
    if (!tasks[i].feasible) {
      ++r.n_infeasible;
      r.n_infeasible_parsed += rv.branch != RewardBranch::Invalid;
      infeasible_sum += rv.value;
      continue;
    }
    ++r.n_feasible;
    reward_sum += rv.value;
    const OracleEntry& e = oracle.at(tasks[i].id);
    const double p = static_cast<double>(e.satisfying_plans) / static_cast<double>(enumerate_plans().size());
    p_sum += p;
    var_sum += p * (1.0 - p);
    if (rv.branch == RewardBranch::Satisfied) {
      ++r.n_completed;
      score_sum += rv.value;
      gap_sum += e.best_reward - rv.value;
    }
  }
  if (r.n_feasible > 0) {
    const double n = static_cast<double>(r.n_feasible);
    r.completion_rate = static_cast<double>(r.n_completed) / n;
    r.completion_stderr = std::sqrt(r.completion_rate * (1.0 - r.completion_rate) / n);
    r.mean_reward = reward_sum / n;
    r.expected_random_completion = p_sum / n;
    r.expected_random_stderr = std::sqrt(var_sum) / n;
  }
  if (r.n_completed > 0) {
    r.avg_score = score_sum / static_cast<double>(r.n_completed);
    r.optimality_gap = gap_sum / static_cast<double>(r.n_completed);
  }
  if (r.n_infeasible > 0) r.infeasible_mean_reward = infeasible_sum / static_cast<double>(r.n_infeasible);
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct MetricDef {
  const char* name;
  bool higher_is_better;
  std::optional<double> (*get)(const EvalReport&);
};

const MetricDef kMetrics[] = {
    {"completion_rate", true, [](const EvalReport& r) -> std::optional<double> { return r.completion_rate; }},
    {"avg_score", true, [](const EvalReport& r) { return r.avg_score; }},
    {"optimality_gap", false, [](const EvalReport& r) { return r.optimality_gap; }},
    {"mean_reward", true, [](const EvalReport& r) -> std::optional<double> { return r.mean_reward; }},
    {"parse_failure_rate", false,
     [](const EvalReport& r) -> std::optional<double> {
       return r.n_tasks ? static_cast<double>(r.n_parse_failures) / static_cast<double>(r.n_tasks) : 0.0;
     }},
};

std::string fmt(const std::optional<double>& v, const char* spec = "%.6f") {
  if (!v) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

}  // namespace

json to_json(const EvalReport& r) {
  return json{{"model", r.model},
              {"n_tasks", r.n_tasks},
              {"n_feasible", r.n_feasible},
              {"n_completed", r.n_completed},
              {"n_parse_failures", r.n_parse_failures},
              {"completion_rate", r.completion_rate},
              {"completion_stderr", r.completion_stderr},
              {"avg_score", opt(r.avg_score)},
              {"optimality_gap", opt(r.optimality_gap)},
              {"mean_reward", r.mean_reward},
              {"n_infeasible", r.n_infeasible},
              {"n_infeasible_parsed", r.n_infeasible_parsed},
              {"infeasible_mean_reward", r.infeasible_mean_reward},
              {"expected_random_completion", r.expected_random_completion},
              {"expected_random_stderr", r.expected_random_stderr}};
}

Comparison compare(std::span<const EvalReport> reports) {
  if (reports.size() < 2) throw std::invalid_argument("compare needs at least two reports");
  Comparison c;
  c.reports.assign(reports.begin(), reports.end());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      for (const auto& m : kMetrics) {
        MetricDelta d{reports[i].model, reports[j].model, m.name, m.get(reports[i]), m.get(reports[j]), {}, {}};
        if (d.value_a && d.value_b) {
          d.delta = *d.value_a - *d.value_b;
          if (*d.delta == 0.0)
            d.leader = "tie";
          else
            d.leader = ((*d.delta > 0.0) == m.higher_is_better) ? d.a : d.b;
        }
        c.deltas.push_back(std::move(d));
      }
    }
  }
  return c;
}

std::string Comparison::table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %10s %10s\n", "model", "completion", "stderr", "avg_score",
                "opt_gap", "parse_fail");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %10.4f %10.4f %10s %10s %10zu\n", r.model.c_str(), r.completion_rate,
                  r.completion_stderr, fmt(r.avg_score, "%.4f").c_str(), fmt(r.optimality_gap, "%.4f").c_str(),
                  r.n_parse_failures);
    out << line;
  }
  out << '\n';
  for (const auto& d : deltas) {
    if (!d.delta) continue;
    std::snprintf(line, sizeof line, "%-18s vs %-18s %-18s %+10.4f  %s\n", d.a.c_str(), d.b.c_str(), d.metric.c_str(),
                  *d.delta, d.leader.c_str());
    out << line;
  }
  return out.str();
}

std::string Comparison::csv() const {
  std::string out = "model_a,model_b,metric,value_a,value_b,delta,leader\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& d : deltas) {
    out += d.a + ',' + d.b + ',' + d.metric + ',' + cell(d.value_a) + ',' + cell(d.value_b) + ',' + cell(d.delta) +
           ',' + d.leader + '\n';
  }
  return out;
}

}  // namespace rldtf
