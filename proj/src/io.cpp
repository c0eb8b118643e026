#include "rldtf/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rldtf {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json to_json(const Task& task) {
  return json{{"id", task.id},
              {"snr_db", task.scenario.snr_db},
              {"del_max_ms", task.target.del_max_ms},
              {"thr_min_bps", task.target.thr_min_bps},
              {"ber_max", task.target.ber_max},
              {"feasible", task.feasible}};
}

Task task_from_json(const json& j) {
  try {
    Task t;
    t.id = j.at("id").get<std::uint64_t>();
    t.scenario.snr_db = j.at("snr_db").get<double>();
    t.target.del_max_ms = j.at("del_max_ms").get<double>();
    t.target.thr_min_bps = j.at("thr_min_bps").get<double>();
    t.target.ber_max = j.at("ber_max").get<double>();
    t.feasible = j.at("feasible").get<bool>();
    return t;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed task: ") + e.what());
  }
}

json to_json(const OrchestrationPlan& plan) {
  json tokens = json::array();
  for (Token t : tokenize_plan(plan)) tokens.push_back(vocab().name(t));
  return json{{"modulation_bits", bits_per_symbol(plan.modulation)},
              {"code_rate", code_rate_value(plan.code_rate)},
              {"n_prb", plan.n_prb},
              {"layers", plan.layers},
              {"receiver", plan.receiver == Receiver::Neural ? "neural" : "conventional"},
              {"n_retx", plan.n_retx},
              {"tokens", tokens}};
}

json to_json(const QosResult& q) {
  return json{{"delay_ms", q.delay_ms}, {"throughput_bps", q.throughput_bps}, {"ber", q.ber}};
}

std::string tasks_to_jsonl(std::span<const Task> tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

void write_tasks_jsonl(const std::filesystem::path& path, std::span<const Task> tasks) {
  write_file_atomic(path, tasks_to_jsonl(tasks));
}

std::vector<Task> read_tasks_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Task> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    tasks.push_back(task_from_json(j));
  }
  return tasks;
}

std::string metrics_header() {
  return "step,policy_loss,value_loss,reg_loss,total_loss,mean_reward,completion_rate,ref_version";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_row(const StepMetrics& m) {
  std::string row = std::to_string(m.step);
  for (double v : {m.policy_loss, m.value_loss, m.reg_loss, m.total_loss, m.mean_reward, m.completion_rate}) {
    row += ',';
    row += format_double(v);
  }
  row += ',';
  row += std::to_string(m.ref_version);
  return row;
}

}  // namespace rldtf
