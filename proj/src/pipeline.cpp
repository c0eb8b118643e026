#include "rldtf/pipeline.hpp"

#include <chrono>

#include "rldtf/checkpoint.hpp"

namespace rldtf {

namespace {

constexpr std::uint64_t kTagTasks = 0x54;
constexpr std::uint64_t kTagInit = 0x49;
constexpr std::uint64_t kTagStage = 0x5354;

std::vector<std::uint64_t> ids_of(std::span<const Task> tasks) {
  std::vector<std::uint64_t> ids;
  ids.reserve(tasks.size());
  for (const auto& t : tasks) ids.push_back(t.id);
  return ids;
}

}  // namespace

TaskSets make_task_sets(const RunConfig& cfg) {
  TaskSets s;
  s.train = generate_tasks(mix_seed(cfg.seed, {kTagTasks, 0}), cfg.data.train_tasks, cfg.taskgen, 0);
  s.validation = generate_tasks(mix_seed(cfg.seed, {kTagTasks, 1}), cfg.data.validation_tasks, cfg.taskgen,
                                kValidationIdOffset);
  s.eval = generate_tasks_with_quota(mix_seed(cfg.seed, {kTagTasks, 2}), cfg.eval.feasible_tasks,
                                     cfg.eval.infeasible_tasks, cfg.taskgen, kEvalIdOffset);
  return s;
}

Pipeline::Pipeline(RunConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), log_(log) {
  cfg_.taskgen.link = cfg_.ndt;
  cfg_.validate();
}

std::filesystem::path Pipeline::path(const std::string& name) const {
  return std::filesystem::path(cfg_.out_dir) / name;
}

std::filesystem::path Pipeline::checkpoint(const std::string& name) const {
  return std::filesystem::path(cfg_.out_dir) / "checkpoints" / (name + ".ckpt");
}

void Pipeline::note(const std::string& msg) const {
  if (log_) *log_ << msg << std::endl;
}

TaskSets Pipeline::gen_tasks() {
  TaskSets s = make_task_sets(cfg_);
  write_tasks_jsonl(path("tasks.jsonl"), s.train);
  write_tasks_jsonl(path("validation_tasks.jsonl"), s.validation);
  write_tasks_jsonl(path("eval_tasks.jsonl"), s.eval);
  note("gen-tasks: " + std::to_string(s.train.size()) + " train, " + std::to_string(s.validation.size()) +
       " validation, " + std::to_string(s.eval.size()) + " eval");
  return s;
}

TaskSets Pipeline::load_tasks() {
  if (!std::filesystem::exists(path("tasks.jsonl")) || !std::filesystem::exists(path("validation_tasks.jsonl")) ||
      !std::filesystem::exists(path("eval_tasks.jsonl")))
    return gen_tasks();
  return {read_tasks_jsonl(path("tasks.jsonl")), read_tasks_jsonl(path("validation_tasks.jsonl")),
          read_tasks_jsonl(path("eval_tasks.jsonl"))};
}

PretrainResult Pipeline::pretrain() {
  const TaskSets sets = load_tasks();
  PolicyParams params = init_params(cfg_.model, mix_seed(cfg_.seed, {kTagInit}));
  save_checkpoint(checkpoint("init"), params);
  const auto t0 = std::chrono::steady_clock::now();
  PretrainResult r = grammar_pretrain(params, sets.train, cfg_.pretrain, cfg_.optimizer,
                                      mix_seed(cfg_.seed, {kTagStage, 1}), cfg_.workers);
  save_checkpoint(checkpoint("pretrained"), params);
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) csv += std::to_string(i) + ',' + format_double(r.losses[i]) + '\n';
  write_file_atomic(path("pretrain_loss.csv"), csv);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note("pretrain: final loss " + format_double(r.final_loss) + ", parse rate " +
       format_double(parse_success_rate(params, sets.validation, cfg_.workers)) + " (" + std::to_string(secs) + " s)");
  return r;
}

RejectSamplingHistory Pipeline::reject_sample() {
  const TaskSets sets = load_tasks();
  PolicyParams params = load_checkpoint(checkpoint("pretrained"));
  const Scorer scorer{cfg_.ndt, cfg_.reward};
  const auto t0 = std::chrono::steady_clock::now();
  RejectSamplingHistory h = run_reject_sampling(params, sets.train, sets.validation, cfg_.reject, scorer,
                                                cfg_.optimizer, mix_seed(cfg_.seed, {kTagStage, 2}), cfg_.workers);
  save_checkpoint(checkpoint("reject"), params);
  json rounds = json::array();
  for (const auto& r : h.rounds)
    rounds.push_back(json{{"success_rate", r.success_rate}, {"retained", r.retained}, {"no_op", r.no_op}});
  write_file_atomic(path("reject_history.json"),
                    json{{"initial_success_rate", h.initial_success_rate},
                         {"accepted_rounds", h.accepted_rounds},
                         {"rounds", rounds}}
                            .dump(2) +
                        "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string msg = "reject-sample: success " + format_double(h.initial_success_rate);
  for (const auto& r : h.rounds) msg += " -> " + format_double(r.success_rate);
  note(msg + " (" + std::to_string(h.accepted_rounds) + " accepted, " + std::to_string(secs) + " s)");
  return h;
}

std::vector<StepMetrics> Pipeline::train_rl(const SampleObjective& objective) {
  const TaskSets sets = load_tasks();
  RlState state = init_rl_state(load_checkpoint(checkpoint("reject")));
  RlContext ctx{cfg_.rl, cfg_.sensitivity, cfg_.optimizer, Scorer{cfg_.ndt, cfg_.reward},
                mix_seed(cfg_.seed, {kTagStage, 3}), cfg_.workers, objective};
  std::vector<StepMetrics> history;
  std::string csv = metrics_header() + "\n";
  const auto t0 = std::chrono::steady_clock::now();
  for (int step = 0; step < cfg_.rl.total_steps; ++step) {
    const std::uint64_t before = state.ref_version;
    const StepMetrics m = rl_step(state, sets.train, ctx);
    history.push_back(m);
    csv += metrics_row(m) + "\n";
    write_file_atomic(path("metrics.csv"), csv);
    if (state.ref_version != before) save_checkpoint(checkpoint("rldtf_latest"), state.params);
    if (log_ && (step % 10 == 0 || step + 1 == cfg_.rl.total_steps)) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      note("train-rl step " + std::to_string(step) + ": reward " + format_double(m.mean_reward) + ", completion " +
           format_double(m.completion_rate) + ", parse " + format_double(m.parse_rate) + ", entropy " +
           format_double(m.entropy) + " (" + std::to_string(secs) + " s)");
    }
  }
  if (history.empty()) write_file_atomic(path("metrics.csv"), csv);
  save_checkpoint(checkpoint("rldtf"), state.params);
  return history;
}

EvalSummary Pipeline::eval() {
  const TaskSets sets = load_tasks();
  const Scorer scorer{cfg_.ndt, cfg_.reward};
  OracleCache oracle;
  if (std::filesystem::exists(path("oracle.jsonl"))) oracle = OracleCache::load(path("oracle.jsonl"));
  bool complete = true;
  for (const auto& t : sets.eval) complete = complete && oracle.contains(t.id);
  if (!complete) {
    oracle = OracleCache();
    oracle.build(sets.eval, scorer, cfg_.workers);
    oracle.save(path("oracle.jsonl"));
  }
  const auto train_ids = ids_of(sets.train);

  EvalSummary s;
  s.reports.push_back(evaluate(RandomValidPolicy(mix_seed(cfg_.seed, {kTagStage, 4})), sets.eval, scorer, oracle,
                               cfg_.workers, train_ids));
  const std::pair<const char*, const char*> variants[] = {
      {"grammar-pretrained", "pretrained"}, {"reject-sampled", "reject"}, {"rldtf", "rldtf"}};
  for (const auto& [label, file] : variants) {
    if (!std::filesystem::exists(checkpoint(file))) {
      note(std::string("eval: skipping ") + label + " (no checkpoint)");
      continue;
    }
    const PolicyParams params = load_checkpoint(checkpoint(file));
    s.reports.push_back(evaluate(GreedyModelPolicy(label, params), sets.eval, scorer, oracle, cfg_.workers, train_ids));
  }

  json reports = json::array();
  for (const auto& r : s.reports) reports.push_back(to_json(r));
  json doc{{"eval_tasks", sets.eval.size()}, {"reports", reports}};
  if (s.reports.size() >= 2) {
    s.comparison = compare(s.reports);
    write_file_atomic(path("compare.csv"), s.comparison.csv());
    // Completion-rate ordering flags between neighbouring variants.
    json order = json::array();
    for (std::size_t i = s.reports.size() - 1; i > 0; --i)
      order.push_back(json{{"better", s.reports[i].model},
                           {"worse", s.reports[i - 1].model},
                           {"delta", s.reports[i].completion_rate - s.reports[i - 1].completion_rate},
                           {"holds", s.reports[i].completion_rate > s.reports[i - 1].completion_rate}});
    doc["completion_ordering"] = order;
    note(s.comparison.table());
  }
  write_file_atomic(path("eval.json"), doc.dump(2) + "\n");
  return s;
}

EvalSummary Pipeline::run_all() {
  gen_tasks();
  pretrain();
  reject_sample();
  train_rl();
  return eval();
}

}  // namespace rldtf
