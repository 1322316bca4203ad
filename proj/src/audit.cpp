#include "leakprobe/audit.hpp"

#include "leakprobe/errors.hpp"
#include "leakprobe/rule_baseline.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace leakprobe {

namespace {

constexpr const char* records_file = "records.jsonl";
constexpr const char* partial_file = "records.partial.jsonl";
constexpr const char* manifest_file = "manifest.json";

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
}

bool is_retryable(const PredictionRecord& r) {
  return r.failure && (r.failure->kind == FailureKind::transport || r.failure->kind == FailureKind::protocol);
}

struct Job {
  std::size_t setting;
  std::size_t pair;
  std::uint64_t record_id;
};

struct RunContext {
  const AuditConfig* config = nullptr;
  std::span<const NameEmailPair> targets;
  std::span<const NameEmailPair> pool;
  const Corpus* corpus = nullptr;
  const LanguageModel* model = nullptr; // null: rule baseline
  std::string model_id;
  std::string unknown_token;
};

PredictionRecord run_job(const RunContext& ctx, const Job& job, std::atomic<bool>& abort) {
  const auto& setting = ctx.config->settings[job.setting];
  PredictionRecord rec{.record_id = job.record_id,
                       .pair_index = job.pair,
                       .target = ctx.targets[job.pair],
                       .setting = setting};
  rec.model_id = ctx.model_id;
  try {
    PromptSources sources{ctx.corpus, ctx.model, ctx.pool, ctx.unknown_token};
    auto prompt = build_prompt(setting, rec.target, job.pair, sources);
    rec.prompt_text = std::move(prompt.text);
    rec.demos_used = std::move(prompt.demos_used);
    rec.flags = prompt.flags;

    if (ctx.model) {
      if (rec.prompt_text.empty())
        throw ProvenanceError("no text precedes the address in its message");
      rec.generated_text = ctx.model->complete(rec.prompt_text, setting.decoding).generated_text;
    } else if (std::holds_alternative<KShot>(setting.kind)) {
      std::vector<Demonstration> demos;
      for (const auto& d : rec.demos_used)
        demos.push_back(make_demonstration(d));
      rec.generated_text = rule_k_shot(rec.target.name, rec.target.email.domain(), demos).str();
    } else {
      rec.generated_text = rule_zero_shot(rec.target.name, rec.target.email.domain()).str();
    }
    rec.predicted = extract_prediction(rec.generated_text);
    rec = judge(std::move(rec));
  } catch (const ProvenanceError& e) {
    rec.failure = Failure{FailureKind::provenance, e.what()};
  } catch (const SamplingError& e) {
    rec.failure = Failure{FailureKind::sampling, e.what()};
  } catch (const TransportError& e) {
    rec.failure = Failure{FailureKind::transport, e.what()};
  } catch (const ProtocolError& e) {
    rec.failure = Failure{FailureKind::protocol, e.what()};
    abort = true;
  }
  return rec;
}

std::unique_ptr<LanguageModel> make_model(const AuditConfig& config, const PreparedData& data) {
  switch (config.backend.kind) {
  case BackendKind::rule:
    return nullptr;
  case BackendKind::remote: {
    RemoteOptions opts;
    opts.base_url = config.backend.url;
    opts.timeout = std::chrono::seconds(config.backend.timeout_s);
    opts.max_retries = config.backend.retries;
    return std::make_unique<RemoteModel>(std::move(opts));
  }
  case BackendKind::mock: {
    const auto& m = config.backend.mock;
    MockMemorizerSpec spec;
    spec.match_window = m.match_window;
    spec.model_id = m.model_id;
    spec.unknown_token = m.unknown_token;
    if (m.train_on_corpus)
      spec.training_corpus = data.corpus->bodies();
    for (const auto& f : m.training_files)
      spec.training_corpus.push_back(read_text(f));
    if (m.association) {
      spec.association_table.emplace();
      for (const auto& e : data.roster.entries())
        spec.association_table->emplace_back(e.name, e.email);
    }
    if (m.pattern_guess) {
      PatternGuess guess{m.domain_source, {}};
      for (const auto& e : data.roster.entries())
        guess.directory.emplace_back(e.name, e.email.domain());
      spec.fallback = std::move(guess);
    }
    return std::make_unique<MockMemorizer>(std::move(spec));
  }
  }
  return nullptr;
}

std::map<std::uint64_t, PredictionRecord> load_existing(const fs::path& dir) {
  std::map<std::uint64_t, PredictionRecord> out;
  for (const char* name : {records_file, partial_file}) {
    auto path = dir / name;
    if (!fs::exists(path))
      continue;
    // A crash can leave a torn last line in the partial file.
    std::ifstream in(path, std::ios::binary);
    for (std::string line; std::getline(in, line);) {
      if (line.empty())
        continue;
      try {
        auto rec = record_from_json(json::parse(line));
        auto id = rec.record_id;
        auto it = out.find(id);
        if (it == out.end() || is_retryable(it->second))
          out.insert_or_assign(id, std::move(rec));
      } catch (const std::exception&) {
        if (std::string_view(name) == records_file)
          throw;
      }
    }
  }
  return out;
}

// The shared engine behind run_audit and run_comparative.
RunManifest execute(const AuditConfig& config, const RunContext& base_ctx, const fs::path& out_dir,
                    const std::string& config_hash, const RunOptions& options) {
  fs::create_directories(out_dir);
  const bool has_run = fs::exists(out_dir / records_file) || fs::exists(out_dir / partial_file) ||
                       fs::exists(out_dir / manifest_file);
  std::map<std::uint64_t, PredictionRecord> existing;
  if (has_run) {
    if (!options.resume)
      throw ConfigError(out_dir.string() + " already holds a run; resume it or choose another output directory");
    if (fs::exists(out_dir / manifest_file)) {
      auto previous = RunManifest::from_json(json::parse(read_text(out_dir / manifest_file)));
      if (previous.config_hash != config_hash)
        throw ConfigError(out_dir.string() + " holds a run of a different configuration (" + previous.config_hash +
                          " vs " + config_hash + ")");
      if (previous.model_id != base_ctx.model_id)
        throw ConfigError(out_dir.string() + " holds a run of model '" + previous.model_id + "', the backend serves '" +
                          base_ctx.model_id + "'");
    }
    existing = load_existing(out_dir);
  }

  RunManifest manifest;
  manifest.config_hash = config_hash;
  manifest.started_at = utc_now();
  manifest.toolkit_version = LEAKPROBE_VERSION;
  manifest.model_id = base_ctx.model_id;
  for (const auto& s : config.settings)
    manifest.settings.push_back(s.label());
  {
    std::string stamp = manifest.started_at;
    std::erase_if(stamp, [](char c) { return c == '-' || c == ':'; });
    manifest.run_id = config_hash.substr(0, 12) + "-" + stamp;
  }
  // Written up front so a crashed run can be resumed.
  write_text(out_dir / manifest_file, manifest.to_json().dump(2) + "\n");

  std::vector<Job> todo;
  std::vector<PredictionRecord> done;
  std::set<std::uint64_t> ids;
  for (std::size_t s = 0; s < config.settings.size(); ++s) {
    const auto label = config.settings[s].label();
    for (std::size_t p = 0; p < base_ctx.targets.size(); ++p) {
      auto id = record_id_for(label, p, config.run_seed);
      if (!ids.insert(id).second)
        throw Error("record id collision for " + label + " #" + std::to_string(p));
      auto it = existing.find(id);
      if (it != existing.end() && !is_retryable(it->second))
        done.push_back(std::move(it->second));
      else
        todo.push_back(Job{s, p, id});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<PredictionRecord> ready;
  std::size_t finished_workers = 0;
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.parallelism, todo.size()));

  std::ofstream partial(out_dir / partial_file, std::ios::binary | std::ios::app);
  if (!partial)
    throw IoError("cannot write " + (out_dir / partial_file).string());

  {
    std::vector<std::jthread> pool;
    if (!todo.empty()) {
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (;;) {
            if (abort)
              break;
            auto i = next++;
            if (i >= todo.size())
              break;
            auto rec = run_job(base_ctx, todo[i], abort);
            {
              std::lock_guard lock(mutex);
              ready.push_back(std::move(rec));
            }
            cv.notify_one();
          }
          {
            std::lock_guard lock(mutex);
            ++finished_workers;
          }
          cv.notify_one();
        });
      }
      // This thread alone writes to disk.
      for (;;) {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return !ready.empty() || finished_workers == workers; });
        auto batch = std::move(ready);
        ready.clear();
        const bool finished = finished_workers == workers;
        lock.unlock();
        for (auto& rec : batch) {
          partial << to_json(rec).dump() << '\n';
          done.push_back(std::move(rec));
          ++manifest.new_completions;
        }
        partial.flush();
        if (finished && batch.empty())
          break;
      }
    }
  }
  partial.close();

  if (abort) {
    std::string message = "backend violated the protocol";
    for (const auto& r : done)
      if (r.failure && r.failure->kind == FailureKind::protocol)
        message = r.failure->message;
    throw ProtocolError(message + "; completed records kept in " + (out_dir / partial_file).string());
  }

  for (const auto& r : done) {
    ++manifest.records_per_setting[r.setting.label()];
    if (is_retryable(r))
      ++manifest.failed_transport;
  }
  write_records_jsonl(out_dir / records_file, std::move(done));
  fs::remove(out_dir / partial_file);

  manifest.finished_at = utc_now();
  write_text(out_dir / manifest_file, manifest.to_json().dump(2) + "\n");
  render_report(out_dir);
  return manifest;
}

RunContext context_for(const AuditConfig& config, const PreparedData& data, const LanguageModel* model) {
  RunContext ctx;
  ctx.config = &config;
  ctx.corpus = data.corpus.get();
  ctx.model = model;
  if (model) {
    try {
      auto meta = model->meta();
      ctx.model_id = meta.model_id;
      ctx.unknown_token = meta.unknown_token;
    } catch (const TransportError& e) {
      throw TransportError(std::string("backend unreachable: ") + e.what());
    }
  } else {
    ctx.model_id = "rule";
  }
  return ctx;
}

std::vector<PredictionRecord> records_for(const RunManifest&, const fs::path& dir) {
  return read_records_jsonl(dir / records_file);
}

} // namespace

json RunManifest::to_json() const {
  return json{{"run_id", run_id},
              {"config_hash", config_hash},
              {"model_id", model_id},
              {"started_at", started_at},
              {"finished_at", finished_at},
              {"settings", settings},
              {"records_per_setting", records_per_setting},
              {"new_completions", new_completions},
              {"failed_transport", failed_transport},
              {"toolkit_version", toolkit_version}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_hash = j.value("config_hash", "");
  m.model_id = j.value("model_id", "");
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.settings = j.value("settings", std::vector<std::string>{});
  m.records_per_setting = j.value("records_per_setting", std::map<std::string, std::size_t>{});
  m.new_completions = j.value("new_completions", std::size_t{0});
  m.failed_transport = j.value("failed_transport", std::size_t{0});
  m.toolkit_version = j.value("toolkit_version", "");
  return m;
}

std::uint64_t record_id_for(const std::string& setting_label, std::size_t pair_index, std::uint64_t run_seed) {
  return fnv1a(setting_label + '\x1f' + std::to_string(pair_index) + '\x1f' + std::to_string(run_seed));
}

PreparedData prepare_data(const AuditConfig& config) {
  PreparedData data;
  auto parsed = parse_mailbox(config.corpus_path, config.corpus_format);
  data.mailbox_skipped = parsed.skipped;
  for (const auto& w : parsed.warnings)
    std::cerr << "warning: " << w << '\n';
  data.corpus = std::make_shared<const Corpus>(std::move(parsed.messages));
  data.roster = Roster::load_csv(config.roster_path, &data.roster_rejected);
  if (data.roster.empty())
    throw ConfigError("roster " + config.roster_path.string() + " has no usable entries");
  data.built = build_pairs(*data.corpus, data.roster, config.filters);
  return data;
}

void write_dataset(const fs::path& dir, const PairBuildResult& built) {
  fs::create_directories(dir);
  write_pairs_jsonl(dir / "dataset.jsonl", built.pairs);
  write_text(dir / "drops.json", to_json(built.drops).dump(2) + "\n");
}

RunManifest run_audit(const AuditConfig& config, const RunOptions& options) {
  config.validate();
  auto data = prepare_data(config);
  auto model = make_model(config, data);
  auto ctx = context_for(config, data, model.get());
  ctx.targets = data.built.pairs;
  ctx.pool = data.built.pairs;
  write_dataset(config.output_dir, data.built);
  return execute(config, ctx, config.output_dir, config.hash(), options);
}

ComparativeResult run_comparative(const AuditConfig& config, std::size_t n, const RunOptions& options) {
  config.validate();
  auto data = prepare_data(config);
  auto unseen = build_unseen_set(*data.corpus, data.roster, data.built.pairs, n, config.filters);
  auto model = make_model(config, data);
  auto ctx = context_for(config, data, model.get());

  ComparativeResult result;
  const auto seen_dir = config.output_dir / "seen";
  const auto unseen_dir = config.output_dir / "unseen";

  ctx.targets = data.built.pairs;
  ctx.pool = data.built.pairs;
  write_dataset(seen_dir, data.built);
  result.seen = execute(config, ctx, seen_dir, config.hash(), options);

  // Demonstrations for unseen targets still come from the corpus pairs.
  PairBuildResult unseen_built{unseen, DropCounts{}};
  ctx.targets = unseen;
  write_dataset(unseen_dir, unseen_built);
  result.unseen =
      execute(config, ctx, unseen_dir, fnv1a_hex(config.hash() + ":unseen:" + std::to_string(n)), options);

  auto seen_rows = aggregate_by_setting(records_for(result.seen, seen_dir));
  auto unseen_rows = aggregate_by_setting(records_for(result.unseen, unseen_dir));
  for (const auto& s : config.settings) {
    ComparativeRow row{s.label()};
    for (const auto& r : seen_rows)
      if (r.setting_label == row.setting_label)
        row.seen_hundredths = r.accuracy_hundredths;
    for (const auto& r : unseen_rows)
      if (r.setting_label == row.setting_label)
        row.unseen_hundredths = r.accuracy_hundredths;
    result.rows.push_back(std::move(row));
  }
  write_text(config.output_dir / "comparative.txt", render_comparative_text(result.rows));
  write_text(config.output_dir / "comparative.csv", render_comparative_csv(result.rows));
  return result;
}

ReportFiles render_report(const fs::path& run_dir) {
  if (!fs::exists(run_dir / records_file))
    throw IoError("no " + std::string(records_file) + " in " + run_dir.string());
  auto records = read_records_jsonl(run_dir / records_file);

  // Config order from the manifest, else first appearance.
  std::vector<std::string> order;
  if (fs::exists(run_dir / manifest_file))
    order = RunManifest::from_json(json::parse(read_text(run_dir / manifest_file))).settings;
  std::unordered_map<std::string, std::vector<PredictionRecord>> groups;
  for (auto& r : records) {
    auto label = r.setting.label();
    if (std::find(order.begin(), order.end(), label) == order.end())
      order.push_back(label);
    groups[label].push_back(r);
  }
  std::vector<MetricsRow> rows;
  std::vector<PredictionRecord> ordered;
  for (const auto& label : order) {
    auto it = groups.find(label);
    if (it == groups.end())
      continue;
    rows.push_back(aggregate(it->second));
    ordered.insert(ordered.end(), it->second.begin(), it->second.end());
  }

  std::vector<NameEmailPair> dataset;
  if (fs::exists(run_dir / "dataset.jsonl"))
    dataset = read_pairs_jsonl(run_dir / "dataset.jsonl");
  auto freq = frequency_rows(dataset, ordered);

  ReportFiles files;
  files.metrics_csv = render_metrics_csv(rows);
  files.metrics_text = render_metrics_text(rows);
  files.frequency_csv = render_frequency_csv(freq);
  files.frequency_text = render_frequency_text(freq);
  files.report_text = files.metrics_text + "\n" + files.frequency_text;
  if (fs::exists(run_dir / "drops.json")) {
    auto drops = drops_from_json(json::parse(read_text(run_dir / "drops.json")));
    files.report_text += "\n" + render_drops_text(drops, dataset.size());
  }

  write_text(run_dir / "metrics.csv", files.metrics_csv);
  write_text(run_dir / "metrics.txt", files.metrics_text);
  write_text(run_dir / "frequency.csv", files.frequency_csv);
  write_text(run_dir / "frequency.txt", files.frequency_text);
  write_text(run_dir / "report.txt", files.report_text);
  return files;
}

} // namespace leakprobe
