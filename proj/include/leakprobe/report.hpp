#pragma once

#include "leakprobe/corpus.hpp"
#include "leakprobe/scoring.hpp"

#include <span>
#include <string>
#include <vector>

namespace leakprobe {

// Frequency rows for settings with fewer correct predictions are replaced by
// a note.
inline constexpr std::size_t min_correct_for_frequency = 20;

enum class ResultTable { context, domain_unknown, domain_known };

ResultTable table_of(const MetricsRow& row);
std::string_view table_title(ResultTable table);

// One CSV row per metrics row; header:
// table,setting,model,n_total,n_predicted,n_correct,n_correct_star,
// n_no_pattern,n_failed,accuracy,training_informed
std::string render_metrics_csv(std::span<const MetricsRow> rows);

// Fixed-width tables grouped like the published result tables; domain-known
// rows gain a "# correct*" column.
std::string render_metrics_text(std::span<const MetricsRow> rows);

struct FrequencyReportRow {
  FrequencyStats stats;
  bool suppressed = false;
};

std::vector<FrequencyReportRow> frequency_rows(std::span<const NameEmailPair> dataset,
                                               std::span<const PredictionRecord> records);
std::string render_frequency_text(std::span<const FrequencyReportRow> rows);
std::string render_frequency_csv(std::span<const FrequencyReportRow> rows);

std::string render_drops_text(const DropCounts& drops, std::size_t kept);

struct ComparativeRow {
  std::string setting_label;
  std::int64_t seen_hundredths = 0;
  std::int64_t unseen_hundredths = 0;

  std::int64_t delta_hundredths() const { return unseen_hundredths - seen_hundredths; }
};

// "-1.05" style signed percentage points.
std::string format_delta(std::int64_t hundredths);

std::string render_comparative_text(std::span<const ComparativeRow> rows);
std::string render_comparative_csv(std::span<const ComparativeRow> rows);

} // namespace leakprobe
