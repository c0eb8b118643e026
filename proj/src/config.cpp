#include "rldtf/config.hpp"

#include <set>

namespace rldtf {

namespace {

// Reads fields out of one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void operator()(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    used_.insert(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + where(key) + "': " + e.what());
    }
  }

  Reader section(const char* key) {
    auto it = j_.find(key);
    used_.insert(key);
    static const json empty = json::object();
    return Reader(it == j_.end() ? empty : *it, where(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key()) + "'");
  }

 private:
  std::string where(const std::string& key = {}) const {
    if (key.empty()) return prefix_.empty() ? "<root>" : prefix_;
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string> used_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }
  template <class T>
  void operator()(const char* key, const T& v) {
    j_[key] = v;
  }

 private:
  json& j_;
};

// One field list per section, shared by reading and writing.
template <class V, class C>
void visit_model(V& v, C& c) {
  v("vocab_size", c.vocab_size);
  v("d_model", c.d_model);
  v("n_layers", c.n_layers);
  v("n_heads", c.n_heads);
  v("d_ff", c.d_ff);
  v("max_len", c.max_len);
  v("split_backbone", c.split_backbone);
  v("init_std", c.init_std);
}

template <class V, class C>
void visit_ndt(V& v, C& c) {
  v("symbols_per_prb", c.symbols_per_prb);
  v("coding_gain_db", c.coding_gain_db);
  v("neural_gain_db", c.neural_gain_db);
  v("conventional_gain_db", c.conventional_gain_db);
  v("d_base_ms", c.d_base_ms);
  v("d_proc_conventional_ms", c.d_proc_conventional_ms);
  v("d_proc_neural_ms", c.d_proc_neural_ms);
  v("d_rtt_ms", c.d_rtt_ms);
  v("block_bits", c.block_bits);
  v("ber_floor", c.ber_floor);
  v("ber_cap", c.ber_cap);
  v("ber_scale", c.ber_scale);
  v("ber_exponent", c.ber_exponent);
}

template <class V, class C>
void visit_reward(V& v, C& c) {
  v("w_thr_pos", c.w_thr_pos);
  v("w_del_pos", c.w_del_pos);
  v("w_ber_pos", c.w_ber_pos);
  v("w_thr_neg", c.w_thr_neg);
  v("w_del_neg", c.w_del_neg);
  v("w_ber_neg", c.w_ber_neg);
  v("base_pos", c.base_pos);
  v("base_neg", c.base_neg);
  v("satisfied_floor", c.satisfied_floor);
  v("gap_floor", c.gap_floor);
}

template <class V, class C>
void visit_rl(V& v, C& c) {
  v("clip_eps", c.loss.clip_eps);
  v("beta_ent", c.loss.beta_ent);
  v("beta_kl", c.loss.beta_kl);
  v("k1", c.loss.k1);
  v("k2", c.loss.k2);
  v("batch_size", c.batch_size);
  v("ppo_epochs", c.ppo_epochs);
  v("minibatch_size", c.minibatch_size);
  v("reference_interval", c.reference_interval);
  v("total_steps", c.total_steps);
  v("temperature", c.temperature);
  v("lr", c.lr);
}

template <class V, class C>
void visit_reject(V& v, C& c) {
  v("completions_per_task", c.completions_per_task);
  v("temperature", c.temperature);
  v("max_rounds", c.max_rounds);
  v("min_improvement", c.min_improvement);
  v("sft_epochs", c.sft_epochs);
  v("minibatch_size", c.minibatch_size);
  v("lr", c.lr);
}

template <class V, class C, class D>
void visit_taskgen(V& v, C& c, D& d) {
  v("feasible_fraction", c.feasible_fraction);
  v("thr_slack_lo", c.thr_slack_lo);
  v("thr_slack_hi", c.thr_slack_hi);
  v("del_slack_lo", c.del_slack_lo);
  v("del_slack_hi", c.del_slack_hi);
  v("ber_decades_lo", c.ber_decades_lo);
  v("ber_decades_hi", c.ber_decades_hi);
  v("infeasible_thr_factor", c.infeasible_thr_factor);
  v("train_tasks", d.train_tasks);
  v("validation_tasks", d.validation_tasks);
}

template <class V, class C>
void visit_eval(V& v, C& c) {
  v("feasible_tasks", c.feasible_tasks);
  v("infeasible_tasks", c.infeasible_tasks);
}

template <class V, class C>
void visit_pretrain(V& v, C& c) {
  v("steps", c.steps);
  v("batch_size", c.batch_size);
  v("lr", c.lr);
}

template <class V, class C>
void visit_sensitivity(V& v, C& c) {
  v("n_perturbations", c.n_perturbations);
  v("alpha", c.alpha);
  v("lambda", c.lambda);
  v("tau", c.tau);
  v("delete_prob", c.delete_prob);
  v("stride", c.stride);
}

template <class V, class C>
void visit_optimizer(V& v, C& c) {
  v("beta1", c.beta1);
  v("beta2", c.beta2);
  v("eps", c.eps);
}

}  // namespace

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (data.train_tasks < 1) throw ConfigError("taskgen.train_tasks must be >= 1");
  if (data.validation_tasks < 1) throw ConfigError("taskgen.validation_tasks must be >= 1");
  if (eval.feasible_tasks < 1) throw ConfigError("eval.feasible_tasks must be >= 1");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) throw ConfigError("optimizer.beta1 must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) throw ConfigError("optimizer.beta2 must lie in [0, 1)");
  if (!(optimizer.eps > 0.0)) throw ConfigError("optimizer.eps must be > 0");
  if (model.vocab_size != static_cast<int>(vocab().size()))
    throw ConfigError("model.vocab_size must equal the token vocabulary size " + std::to_string(vocab().size()));
  try {
    model.validate();
    ndt.validate();
    reward.validate();
    rl.validate();
    reject.validate();
    taskgen.validate();
    pretrain.validate();
    sensitivity.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Reader root(j, "");
  root("seed", c.seed);
  root("out_dir", c.out_dir);
  root("workers", c.workers);
  {
    Reader r = root.section("model");
    visit_model(r, c.model);
    r.finish();
  }
  {
    Reader r = root.section("ndt");
    visit_ndt(r, c.ndt);
    r.finish();
  }
  {
    Reader r = root.section("reward");
    visit_reward(r, c.reward);
    r.finish();
  }
  {
    Reader r = root.section("rl");
    visit_rl(r, c.rl);
    r.finish();
  }
  {
    Reader r = root.section("reject");
    visit_reject(r, c.reject);
    r.finish();
  }
  {
    Reader r = root.section("taskgen");
    visit_taskgen(r, c.taskgen, c.data);
    r.finish();
  }
  {
    Reader r = root.section("eval");
    visit_eval(r, c.eval);
    r.finish();
  }
  {
    Reader r = root.section("pretrain");
    visit_pretrain(r, c.pretrain);
    r.finish();
  }
  {
    Reader r = root.section("sensitivity");
    visit_sensitivity(r, c.sensitivity);
    r.finish();
  }
  {
    Reader r = root.section("optimizer");
    visit_optimizer(r, c.optimizer);
    r.finish();
  }
  root.finish();
  c.taskgen.link = c.ndt;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const RunConfig& c) {
  json j = json::object();
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["workers"] = c.workers;
  auto emit = [&](const char* name, auto&& fn) {
    json s;
    Writer w(s);
    fn(w);
    j[name] = s;
  };
  emit("model", [&](Writer& w) { visit_model(w, c.model); });
  emit("ndt", [&](Writer& w) { visit_ndt(w, c.ndt); });
  emit("reward", [&](Writer& w) { visit_reward(w, c.reward); });
  emit("rl", [&](Writer& w) { visit_rl(w, c.rl); });
  emit("reject", [&](Writer& w) { visit_reject(w, c.reject); });
  emit("taskgen", [&](Writer& w) { visit_taskgen(w, c.taskgen, c.data); });
  emit("eval", [&](Writer& w) { visit_eval(w, c.eval); });
  emit("pretrain", [&](Writer& w) { visit_pretrain(w, c.pretrain); });
  emit("sensitivity", [&](Writer& w) { visit_sensitivity(w, c.sensitivity); });
  emit("optimizer", [&](Writer& w) { visit_optimizer(w, c.optimizer); });
  return j;
}

}  // namespace rldtf
