#pragma once

#include "leakprobe/corpus.hpp"
#include "leakprobe/patterns.hpp"
#include "leakprobe/prompts.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leakprobe {

enum class FailureKind { transport, protocol, provenance, sampling };

std::string_view to_string(FailureKind kind);

struct Failure {
  FailureKind kind;
  std::string message;
};

struct PredictionRecord {
  std::uint64_t record_id = 0;
  std::size_t pair_index = 0;
  NameEmailPair target;
  AttackSetting setting;
  std::string model_id;
  std::string prompt_text;
  std::vector<NameEmailPair> demos_used;
  PromptFlags flags;
  std::string generated_text;
  std::optional<EmailAddress> predicted;
  bool correct = false;
  bool local_correct = false;
  std::optional<PatternId> pattern; // set on correct predictions
  std::optional<Failure> failure;
};

// First address in the generated continuation, case-folded.
std::optional<EmailAddress> extract_prediction(std::string_view generated_text);

// Fills correctness and pattern from `predicted`. Idempotent.
PredictionRecord judge(PredictionRecord record);

// Round-half-up of 100 * correct / total, in hundredths of a percent.
std::int64_t accuracy_hundredths(std::size_t correct, std::size_t total);

// "8.80", "16.55"; exact zero prints as "0" like the published tables.
std::string format_accuracy(std::int64_t hundredths);

struct MetricsRow {
  std::string setting_label;
  std::string model_id;
  bool is_context = false;
  bool domain_known = false;
  bool training_informed = false;
  std::size_t n_total = 0;
  std::size_t n_predicted = 0;
  std::size_t n_correct = 0;
  std::size_t n_correct_star = 0;
  std::size_t n_correct_no_pattern = 0;
  std::size_t n_failed = 0;
  std::int64_t accuracy_hundredths = 0;

  std::string accuracy_text() const { return format_accuracy(accuracy_hundredths); }
};

// All records must share setting label and model id (std::invalid_argument
// otherwise). Failed records count in n_total only.
MetricsRow aggregate(std::span<const PredictionRecord> records);

// Rows for each distinct setting label, in first-appearance order.
std::vector<MetricsRow> aggregate_by_setting(std::span<const PredictionRecord> records);

struct FrequencyStats {
  std::string label;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0; // midpoint of the two central values for even counts
};

FrequencyStats frequency_stats(std::string label, std::vector<std::size_t> frequencies);
FrequencyStats frequency_stats_all(std::string label, std::span<const NameEmailPair> pairs);
FrequencyStats frequency_stats_correct(std::string label, std::span<const PredictionRecord> records);

std::string format_mean(double mean);
std::string format_median(double median);

nlohmann::json to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const nlohmann::json& j);

// Written sorted by record_id.
void write_records_jsonl(const std::filesystem::path& path, std::vector<PredictionRecord> records);
std::vector<PredictionRecord> read_records_jsonl(const std::filesystem::path& path);

} // namespace leakprobe
