#pragma once

#include "leakprobe/corpus.hpp"
#include "leakprobe/mock_model.hpp"
#include "leakprobe/prompts.hpp"
#include "leakprobe/remote_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace leakprobe {

enum class BackendKind { remote, mock, rule };

std::string_view to_string(BackendKind kind);

// How the mock memorizer is assembled for an audit. Knowledge tables come from
// the roster.
struct MockOptions {
  int match_window = 5;
  bool train_on_corpus = true;
  std::vector<std::filesystem::path> training_files;
  bool association = false;
  bool pattern_guess = false;
  DomainSource domain_source = DomainSource::directory;
  std::string model_id = "mock-memorizer";
  std::string unknown_token = "<unk>";

  nlohmann::json canonical() const;
};

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string url;
  std::filesystem::path mock_spec_path;
  MockOptions mock;
  int timeout_s = 60;
  int retries = 3;
};

struct AuditConfig {
  std::filesystem::path corpus_path;
  MailboxFormat corpus_format = MailboxFormat::concatenated;
  std::filesystem::path roster_path;
  FilterOptions filters;
  std::vector<AttackSetting> settings;
  BackendConfig backend;
  std::size_t parallelism = 8;
  std::uint64_t run_seed = 0;
  std::filesystem::path output_dir;

  // Throws ConfigError.
  void validate() const;

  // Every field that can change results; parallelism and the output
  // directory are left out.
  nlohmann::json canonical() const;
  std::string hash() const;
};

// Relative paths are resolved against `base_dir`. Throws ConfigError.
AuditConfig parse_audit_config(std::string_view toml_text, const std::filesystem::path& base_dir);
// Parses, applies the environment override, then validates.
AuditConfig load_audit_config(const std::filesystem::path& path);
MockOptions parse_mock_spec(std::string_view toml_text, const std::filesystem::path& base_dir);

// LEAKPROBE_BACKEND_URL, when set and non-empty, switches the backend to the
// remote service at that URL.
void apply_environment(AuditConfig& config);

// 16 hex digits of FNV-1a 64.
std::string fnv1a_hex(std::string_view data);
std::uint64_t fnv1a(std::string_view data);

} // namespace leakprobe
