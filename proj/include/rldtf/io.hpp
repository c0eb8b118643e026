#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rldtf/dsl.hpp"
#include "rldtf/trainer.hpp"
#include "rldtf/types.hpp"

namespace rldtf {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

json to_json(const Task& task);
Task task_from_json(const json& j);
json to_json(const OrchestrationPlan& plan);
json to_json(const QosResult& q);

// One task object per line.
std::string tasks_to_jsonl(std::span<const Task> tasks);
void write_tasks_jsonl(const std::filesystem::path& path, std::span<const Task> tasks);
std::vector<Task> read_tasks_jsonl(const std::filesystem::path& path);

// Metrics CSV with a fixed header; values printed with 17 significant digits.
std::string metrics_header();
std::string metrics_row(const StepMetrics& m);
std::string format_double(double v);

}  // namespace rldtf
