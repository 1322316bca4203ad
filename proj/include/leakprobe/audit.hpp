#pragma once

#include "leakprobe/config.hpp"
#include "leakprobe/report.hpp"
#include "leakprobe/scoring.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace leakprobe {

// CLI exit codes.
enum class ExitCode : int { success = 0, config_error = 1, backend_error = 2, partial = 3 };

struct RunOptions {
  // Continue a run found in the output directory instead of refusing to
  // overwrite it. Completed records are never re-queried.
  bool resume = false;
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::string model_id;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> settings; // labels in config order
  std::map<std::string, std::size_t> records_per_setting;
  std::size_t new_completions = 0;
  std::size_t failed_transport = 0; // transport or protocol failures
  std::string toolkit_version;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// Stable identity of one (setting, pair) job.
std::uint64_t record_id_for(const std::string& setting_label, std::size_t pair_index, std::uint64_t run_seed);

struct PreparedData {
  std::shared_ptr<const Corpus> corpus;
  Roster roster;
  PairBuildResult built;
  std::size_t roster_rejected = 0;
  std::size_t mailbox_skipped = 0;
};

PreparedData prepare_data(const AuditConfig& config);

// Writes dataset.jsonl and drops.json into `dir`.
void write_dataset(const std::filesystem::path& dir, const PairBuildResult& built);

// Runs every (setting, pair) job over the dataset built from the config and
// persists records, metrics and a manifest under config.output_dir. Throws
// ConfigError for an existing run without resume, TransportError when the
// backend is unreachable at start, and ProtocolError after persisting
// whatever completed when the backend violates the protocol.
RunManifest run_audit(const AuditConfig& config, const RunOptions& options = {});

struct ComparativeResult {
  RunManifest seen;
  RunManifest unseen;
  std::vector<ComparativeRow> rows;
};

// The same settings over the corpus dataset (output/seen) and over n roster
// addresses that never occur in the corpus (output/unseen), then a side by
// side accuracy table in output/comparative.{txt,csv}.
ComparativeResult run_comparative(const AuditConfig& config, std::size_t n, const RunOptions& options = {});

struct ReportFiles {
  std::string metrics_csv;
  std::string metrics_text;
  std::string frequency_csv;
  std::string frequency_text;
  std::string report_text; // metrics, frequency and dataset appendix
};

// Re-derives every table from records.jsonl (and dataset.jsonl/drops.json
// when present) and writes them next to it.
ReportFiles render_report(const std::filesystem::path& run_dir);

} // namespace leakprobe
