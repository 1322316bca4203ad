#include "leakprobe/audit.hpp"
#include "leakprobe/errors.hpp"
#include "leakprobe/patterns.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace leakprobe;

namespace {

int code(ExitCode c) { return static_cast<int>(c); }

AuditConfig load_config(const fs::path& path, const std::string& output) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  auto config = parse_audit_config(text.str(), fs::absolute(path).parent_path());
  apply_environment(config);
  if (!output.empty())
    config.output_dir = output;
  config.validate();
  return config;
}

// Exit 3 when any record lacks a prediction for transport reasons.
int run_status(const RunManifest& m) {
  return m.failed_transport ? code(ExitCode::partial) : code(ExitCode::success);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit language models for leakage of personal email addresses."};
  app.set_version_flag("--version", std::string(LEAKPROBE_VERSION));
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build the (name, address) dataset from a mailbox dump.");
  fs::path corpus_path, roster_path, ingest_out;
  std::string format = "mbox";
  FilterOptions filters;
  ingest->add_option("--corpus", corpus_path, "Mailbox file or directory")->required();
  ingest->add_option("--format", format, "maildir, mbox or csv")->capture_default_str();
  ingest->add_option("--roster", roster_path, "CSV with columns email,name")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->required();
  ingest->add_option("--excluded-domain", filters.excluded_domain)->capture_default_str();
  ingest->add_option("--min-domain-count", filters.min_domain_count)->capture_default_str();
  ingest->add_option("--max-name-tokens", filters.max_name_tokens)->capture_default_str();

  // attack
  auto* attack = app.add_subcommand("attack", "Run every configured setting against the backend.");
  fs::path config_path;
  std::string output;
  bool resume = false;
  attack->add_option("--config", config_path, "Audit configuration (TOML)")->required();
  attack->add_option("--output", output, "Override the run directory");
  attack->add_flag("--resume", resume, "Continue the run in the output directory");

  // comparative
  auto* comparative = app.add_subcommand("comparative", "Compare accuracy on corpus and never-seen addresses.");
  std::size_t n_unseen = 0;
  comparative->add_option("--config", config_path)->required();
  comparative->add_option("--n", n_unseen, "Size of the unseen set")->required()->check(CLI::PositiveNumber);
  comparative->add_option("--output", output);
  comparative->add_flag("--resume", resume);

  // report
  auto* report = app.add_subcommand("report", "Print the result tables of a finished run.");
  fs::path run_dir;
  std::string report_format = "text";
  report->add_option("--run", run_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv"}))->capture_default_str();

  auto* freq = app.add_subcommand("freq", "Print corpus frequency statistics of a finished run.");
  freq->add_option("--run", run_dir)->required()->check(CLI::ExistingDirectory);
  freq->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv"}))->capture_default_str();

  auto* patterns = app.add_subcommand("patterns", "Print the address pattern taxonomy as JSON.");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto parsed = parse_mailbox(corpus_path, parse_mailbox_format(format));
      for (const auto& w : parsed.warnings)
        std::cerr << "warning: " << w << '\n';
      Corpus corpus(std::move(parsed.messages));
      std::size_t rejected = 0;
      auto roster = Roster::load_csv(roster_path, &rejected);
      auto built = build_pairs(corpus, roster, filters);
      write_dataset(ingest_out, built);
      std::cout << render_drops_text(built.drops, built.pairs.size());
      if (parsed.skipped || rejected)
        std::cout << "skipped messages: " << parsed.skipped << ", rejected roster rows: " << rejected << '\n';
      return code(ExitCode::success);
    }
    if (*attack) {
      auto config = load_config(config_path, output);
      auto manifest = run_audit(config, RunOptions{resume});
      std::cerr << "run " << manifest.run_id << ": " << manifest.new_completions << " new completions, "
                << manifest.failed_transport << " failed, in " << config.output_dir.string() << '\n';
      std::cout << render_report(config.output_dir).metrics_text;
      return run_status(manifest);
    }
    if (*comparative) {
      auto config = load_config(config_path, output);
      auto result = run_comparative(config, n_unseen, RunOptions{resume});
      std::cout << render_comparative_text(result.rows);
      return std::max(run_status(result.seen), run_status(result.unseen));
    }
    if (*report) {
      auto files = render_report(run_dir);
      std::cout << (report_format == "csv" ? files.metrics_csv : files.report_text);
      return code(ExitCode::success);
    }
    if (*freq) {
      auto files = render_report(run_dir);
      std::cout << (report_format == "csv" ? files.frequency_csv : files.frequency_text);
      return code(ExitCode::success);
    }
    if (*patterns) {
      std::cout << taxonomy_json().dump(2) << '\n';
      return code(ExitCode::success);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return code(ExitCode::config_error);
  } catch (const TransportError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return code(ExitCode::backend_error);
  } catch (const ProtocolError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return code(ExitCode::backend_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::config_error);
  }
  return code(ExitCode::success);
}
