#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "rldtf/checkpoint.hpp"
#include "rldtf/config.hpp"
#include "rldtf/pipeline.hpp"
#include "rldtf/sensitivity.hpp"
#include "rldtf/task_model.hpp"

using namespace rldtf;

namespace {

// Token names separated by spaces or commas; EOS is appended when absent.
TokenSeq parse_token_names(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  TokenSeq out;
  std::string name;
  while (in >> name) out.push_back(vocab().id(name));
  if (out.empty() || out.back() != kEos) out.push_back(kEos);
  return out;
}

OrchestrationPlan plan_from_names(const std::string& text) {
  const ParseResult r = parse_plan(parse_token_names(text));
  if (!r.ok()) throw std::invalid_argument("invalid plan: " + r.error().message);
  return r.plan();
}

struct TaskArgs {
  double snr = 0.0, del = 0.0, thr = 0.0, ber = 0.0;
  void add(CLI::App* app, bool required) {
    app->add_option("--snr", snr, "Scenario SNR in dB")->required();
    auto* d = app->add_option("--del", del, "Maximum delay (ms)");
    auto* t = app->add_option("--thr", thr, "Minimum throughput (bit/s)");
    auto* b = app->add_option("--ber", ber, "Maximum BER");
    if (required) {
      d->required();
      t->required();
      b->required();
    }
  }
  Task task() const {
    Task t;
    t.scenario.snr_db = snr;
    t.target = {del, thr, ber};
    return t;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orchestration-plan language model trained from digital-twin feedback"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--out-dir", out_dir, "Artifact directory");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

  auto* gen = app.add_subcommand("gen-tasks", "Write train/validation/eval task sets as JSONL");
  std::optional<std::size_t> count;
  gen->add_option("--count", count, "Number of training tasks");
  auto* pre = app.add_subcommand("pretrain", "Grammar pretraining");
  auto* rej = app.add_subcommand("reject-sample", "Rejection-sampling warm start");
  auto* rl = app.add_subcommand("train-rl", "RL from twin feedback");
  auto* ev = app.add_subcommand("eval", "Evaluate all available variants");
  auto* all = app.add_subcommand("pipeline", "Run every stage in order");

  auto* sim = app.add_subcommand("simulate", "Evaluate one plan on the twin");
  std::string plan_text;
  TaskArgs sim_task;
  sim->add_option("--plan", plan_text, "Plan tokens, e.g. \"MOD_QPSK CR_1/2 PRB_16 LAY_1 RX_conv RETX_0\"")
      ->required();
  sim_task.add(sim, false);

  auto* orc = app.add_subcommand("oracle", "Exhaustive best plan for a task");
  TaskArgs orc_task;
  orc_task.add(orc, true);

  auto* sen = app.add_subcommand("sensitivity", "Per-token reward sensitivity of a plan");
  TaskArgs sen_task;
  std::string sen_plan;
  std::optional<int> sen_n;
  std::string sen_ckpt;
  sen_task.add(sen, true);
  auto* sen_plan_opt = sen->add_option("--plan", sen_plan, "Plan tokens");
  auto* sen_ckpt_opt =
      sen->add_option("--checkpoint", sen_ckpt, "Score the greedy completion of this checkpoint instead");
  sen_plan_opt->excludes(sen_ckpt_opt);
  sen->add_option("--n", sen_n, "Perturbations per token");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (workers) cfg.workers = *workers;
    if (count) cfg.data.train_tasks = *count;
    cfg.validate();
    if (print_config) {
      std::cout << to_json(cfg).dump(2) << "\n";
      return 0;
    }
    const Scorer scorer{cfg.ndt, cfg.reward};

    if (*sim) {
      const OrchestrationPlan plan = plan_from_names(plan_text);
      const QosResult q = simulate(plan, sim_task.task().scenario, cfg.ndt);
      json out{{"snr_db", sim_task.snr}, {"plan", to_json(plan)}, {"qos", to_json(q)}};
      if (sim->count("--thr") && sim->count("--del") && sim->count("--ber")) {
        const RewardValue r = compute_reward(q, sim_task.task().target, cfg.reward);
        out["reward"] = r.value;
        out["branch"] = std::string(to_string(r.branch));
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*orc) {
      const OracleResult r = oracle_best(orc_task.task(), cfg.ndt, cfg.reward);
      json out{{"feasible", r.feasible()}, {"best_reward", r.best_reward}, {"satisfying_plans", r.satisfying_plans}};
      if (r.best_plan) {
        out["plan"] = to_json(*r.best_plan);
        out["qos"] = to_json(simulate(*r.best_plan, orc_task.task().scenario, cfg.ndt));
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*sen) {
      SensitivityConfig sc = cfg.sensitivity;
      if (sen_n) sc.n_perturbations = *sen_n;
      sc.validate();
      const Task task = sen_task.task();
      if (sen_plan.empty() && sen_ckpt.empty()) throw std::invalid_argument("sensitivity needs --plan or --checkpoint");
      TokenSeq tokens;
      if (!sen_ckpt.empty()) {
        const PolicyParams params = load_checkpoint(sen_ckpt);
        Rng unused(0);
        tokens = sample_completion(params, encode_prompt(task), {.greedy = true}, unused).tokens;
      } else {
        tokens = tokenize_plan(plan_from_names(sen_plan));
      }
      const double r0 = scorer.score(task, tokens).value;
      const auto profile = estimate_sensitivity(scorer, task, tokens, r0, sc, mix_seed(cfg.seed, {0x5345}));
      json names = json::array();
      for (Token t : tokens) names.push_back(vocab().name(t));
      std::cout << json{{"tokens", names}, {"reward", r0}, {"sensitivity", profile},
                        {"weights", token_weights(profile, sc)}}
                       .dump(2)
                << "\n";
      return 0;
    }

    Pipeline pipeline(cfg, &std::cerr);
    if (*gen) {
      pipeline.gen_tasks();
    } else if (*pre) {
      pipeline.pretrain();
    } else if (*rej) {
      pipeline.reject_sample();
    } else if (*rl) {
      pipeline.train_rl();
    } else if (*ev) {
      pipeline.eval();
    } else if (*all) {
      pipeline.run_all();
    } else {
      std::cout << app.help();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
