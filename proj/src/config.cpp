#include "leakprobe/config.hpp"

#include "leakprobe/errors.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace leakprobe {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <class T>
T get_or(const toml::table& t, std::string_view key, T fallback) {
  auto node = t.get(key);
  if (!node)
    return fallback;
  if (auto v = node->value<T>())
    return *v;
  throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
}

std::string require_string(const toml::table& t, std::string_view key, std::string_view where) {
  auto v = t[key].value<std::string>();
  if (!v)
    throw ConfigError(std::string(where) + "." + std::string(key) + " is required");
  return *v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

toml::table parse_toml(std::string_view text, std::string_view source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
}

DecodingConfig parse_decoding(const toml::table& t) {
  DecodingConfig d;
  auto algorithm = get_or<std::string>(t, "decoding", "greedy");
  if (algorithm == "greedy") {
    d.algorithm = Greedy{};
  } else if (algorithm == "top_k") {
    d.algorithm = TopK{static_cast<int>(get_or<int64_t>(t, "top_k", 50)), get_or<double>(t, "temperature", 0.7)};
    d.sampling_seed = static_cast<std::uint64_t>(get_or<int64_t>(t, "sampling_seed", 0));
  } else if (algorithm == "beam") {
    d.algorithm = Beam{static_cast<int>(get_or<int64_t>(t, "num_beams", 5)), get_or<bool>(t, "early_stopping", true)};
  } else {
    throw ConfigError("unknown decoding '" + algorithm + "' (greedy, top_k or beam)");
  }
  d.max_new_tokens = static_cast<int>(get_or<int64_t>(t, "max_new_tokens", 100));
  return d;
}

AttackSetting parse_setting(const toml::table& t, std::uint64_t run_seed) {
  AttackSetting s;
  auto kind = require_string(t, "kind", "settings");
  if (kind == "context") {
    s.kind = ContextPrefix{static_cast<int>(get_or<int64_t>(t, "length", 50))};
  } else if (kind == "zero_shot") {
    auto v = get_or<std::string>(t, "variant", "A");
    if (v.size() != 1 || v[0] < 'A' || v[0] > 'D')
      throw ConfigError("zero_shot variant must be A, B, C or D");
    s.kind = ZeroShot{static_cast<ZeroShotVariant>(v[0] - 'A')};
  } else if (kind == "zero_shot_domain") {
    s.kind = ZeroShotWithDomain{};
  } else if (kind == "k_shot") {
    s.kind = KShot{static_cast<int>(get_or<int64_t>(t, "k", 1)), get_or<bool>(t, "domain_known", false)};
  } else {
    throw ConfigError("unknown setting kind '" + kind + "'");
  }
  s.decoding = parse_decoding(t);
  s.seed = static_cast<std::uint64_t>(get_or<int64_t>(t, "seed", static_cast<int64_t>(run_seed)));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("setting ") + s.label() + ": " + e.what());
  }
  return s;
}

MockOptions mock_from_table(const toml::table& t, const fs::path& base) {
  MockOptions m;
  m.match_window = static_cast<int>(get_or<int64_t>(t, "match_window", 5));
  if (auto* arr = t["training"].as_array()) {
    m.train_on_corpus = false;
    for (auto& node : *arr) {
      auto v = node.value<std::string>();
      if (!v)
        throw ConfigError("mock training entries must be strings");
      if (*v == "corpus")
        m.train_on_corpus = true;
      else
        m.training_files.push_back(resolve(base, *v));
    }
  } else if (auto v = t["training"].value<std::string>()) {
    m.train_on_corpus = *v == "corpus";
    if (!m.train_on_corpus)
      m.training_files.push_back(resolve(base, *v));
  }
  m.association = get_or<bool>(t, "association", false);
  auto fallback = get_or<std::string>(t, "fallback", "empty");
  if (fallback == "pattern_guess")
    m.pattern_guess = true;
  else if (fallback != "empty")
    throw ConfigError("mock fallback must be 'empty' or 'pattern_guess'");
  auto source = get_or<std::string>(t, "domain_source", "directory");
  if (source == "directory")
    m.domain_source = DomainSource::directory;
  else if (source == "prompt")
    m.domain_source = DomainSource::prompt;
  else
    throw ConfigError("mock domain_source must be 'directory' or 'prompt'");
  m.model_id = get_or<std::string>(t, "model_id", m.model_id);
  m.unknown_token = get_or<std::string>(t, "unknown_token", m.unknown_token);
  if (m.match_window < 1)
    throw ConfigError("mock match_window must be at least 1");
  return m;
}

} // namespace

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
  case BackendKind::remote:
    return "remote";
  case BackendKind::mock:
    return "mock";
  case BackendKind::rule:
    return "rule";
  }
  return "?";
}

json MockOptions::canonical() const {
  json files = json::array();
  for (const auto& f : training_files)
    files.push_back(f.generic_string());
  return json{{"match_window", match_window},
              {"train_on_corpus", train_on_corpus},
              {"training_files", files},
              {"association", association},
              {"fallback", pattern_guess ? "pattern_guess" : "empty"},
              {"domain_source", domain_source == DomainSource::prompt ? "prompt" : "directory"},
              {"model_id", model_id},
              {"unknown_token", unknown_token}};
}

MockOptions parse_mock_spec(std::string_view toml_text, const fs::path& base_dir) {
  return mock_from_table(parse_toml(toml_text, "mock spec"), base_dir);
}

void AuditConfig::validate() const {
  if (settings.empty())
    throw ConfigError("at least one [[settings]] entry is required");
  if (corpus_path.empty())
    throw ConfigError("corpus.path is required");
  if (roster_path.empty())
    throw ConfigError("corpus.roster is required");
  if (output_dir.empty())
    throw ConfigError("run.output is required");
  if (parallelism < 1)
    throw ConfigError("run.parallelism must be at least 1");
  if (filters.max_name_tokens < 1)
    throw ConfigError("filters.max_name_tokens must be at least 1");

  std::set<std::string> labels;
  for (const auto& s : settings) {
    if (!labels.insert(s.label()).second)
      throw ConfigError("duplicate setting '" + s.label() + "'");
    if (backend.kind == BackendKind::mock && !s.decoding.is_greedy())
      throw ConfigError("setting '" + s.label() + "': the mock backend decodes greedily only");
    if (backend.kind == BackendKind::rule && !s.domain_known())
      throw ConfigError("setting '" + s.label() + "': the rule baseline needs the target domain");
  }
  if (backend.kind == BackendKind::remote && backend.url.empty())
    throw ConfigError("backend.url is required for the remote backend");
}

json AuditConfig::canonical() const {
  json s = json::array();
  for (const auto& setting : settings)
    s.push_back(to_json(setting));
  // The url is left out: the same model may come back on another address.
  // Resume compares the model id the backend reports instead.
  json b{{"kind", to_string(backend.kind)}};
  if (backend.kind == BackendKind::mock)
    b["mock"] = backend.mock.canonical();
  return json{{"corpus", {{"path", corpus_path.generic_string()}, {"format", to_string(corpus_format)}}},
              {"roster", roster_path.generic_string()},
              {"filters",
               {{"excluded_domain", ascii_lower(filters.excluded_domain)},
                {"min_domain_count", filters.min_domain_count},
                {"max_name_tokens", filters.max_name_tokens}}},
              {"settings", s},
              {"backend", b},
              {"run_seed", run_seed}};
}

std::string AuditConfig::hash() const { return fnv1a_hex(canonical().dump()); }

AuditConfig parse_audit_config(std::string_view toml_text, const fs::path& base_dir) {
  auto root = parse_toml(toml_text, "config");
  AuditConfig c;

  auto* corpus = root["corpus"].as_table();
  if (!corpus)
    throw ConfigError("[corpus] section is required");
  c.corpus_path = resolve(base_dir, require_string(*corpus, "path", "corpus"));
  try {
    c.corpus_format = parse_mailbox_format(get_or<std::string>(*corpus, "format", "mbox"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.roster_path = resolve(base_dir, require_string(*corpus, "roster", "corpus"));
  c.filters.excluded_domain = get_or<std::string>(*corpus, "excluded_domain", c.filters.excluded_domain);

  if (auto* f = root["filters"].as_table()) {
    c.filters.min_domain_count = static_cast<std::size_t>(get_or<int64_t>(*f, "min_domain_count", 3));
    c.filters.max_name_tokens = static_cast<std::size_t>(get_or<int64_t>(*f, "max_name_tokens", 3));
  }

  if (auto* run = root["run"].as_table()) {
    auto p = get_or<int64_t>(*run, "parallelism", 8);
    if (p < 1)
      throw ConfigError("run.parallelism must be at least 1");
    c.parallelism = static_cast<std::size_t>(p);
    c.run_seed = static_cast<std::uint64_t>(get_or<int64_t>(*run, "seed", 0));
    if (auto out = (*run)["output"].value<std::string>())
      c.output_dir = resolve(base_dir, *out);
  }

  if (auto* b = root["backend"].as_table()) {
    auto kind = get_or<std::string>(*b, "kind", "mock");
    if (kind == "remote")
      c.backend.kind = BackendKind::remote;
    else if (kind == "mock")
      c.backend.kind = BackendKind::mock;
    else if (kind == "rule")
      c.backend.kind = BackendKind::rule;
    else
      throw ConfigError("backend.kind must be remote, mock or rule");
    c.backend.url = get_or<std::string>(*b, "url", "");
    c.backend.timeout_s = static_cast<int>(get_or<int64_t>(*b, "timeout_s", 60));
    c.backend.retries = static_cast<int>(get_or<int64_t>(*b, "retries", 3));
    if (auto spec = (*b)["mock_spec"].value<std::string>()) {
      c.backend.mock_spec_path = resolve(base_dir, *spec);
      c.backend.mock = parse_mock_spec(slurp(c.backend.mock_spec_path), c.backend.mock_spec_path.parent_path());
    } else if (auto* inline_mock = (*b)["mock"].as_table()) {
      c.backend.mock = mock_from_table(*inline_mock, base_dir);
    }
  }

  if (auto* arr = root["settings"].as_array()) {
    for (auto& node : *arr) {
      auto* t = node.as_table();
      if (!t)
        throw ConfigError("[[settings]] entries must be tables");
      c.settings.push_back(parse_setting(*t, c.run_seed));
    }
  }
  return c;
}

AuditConfig load_audit_config(const fs::path& path) {
  auto c = parse_audit_config(slurp(path), fs::absolute(path).parent_path());
  apply_environment(c);
  c.validate();
  return c;
}

void apply_environment(AuditConfig& config) {
  if (const char* url = std::getenv("LEAKPROBE_BACKEND_URL"); url && *url) {
    config.backend.kind = BackendKind::remote;
    config.backend.url = url;
  }
}

} // namespace leakprobe
