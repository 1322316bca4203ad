#include "doctest.h"

#include "support.hpp"

#include "leakprobe/config.hpp"
#include "leakprobe/errors.hpp"

#include <cstdlib>

using namespace leakprobe;
using namespace leakprobe::testing;

namespace {

const char* full_config = R"(
[corpus]
path = "data/enron.mbox"
format = "mbox"
roster = "data/roster.csv"
excluded_domain = "Enron.com"

[filters]
min_domain_count = 4
max_name_tokens = 3

[backend]
kind = "mock"

[backend.mock]
match_window = 6
training = ["corpus", "extra/pile.txt"]
association = true
fallback = "pattern_guess"
domain_source = "prompt"

[run]
parallelism = 2
seed = 17
output = "runs/a"

[[settings]]
kind = "context"
length = 100

[[settings]]
kind = "zero_shot"
variant = "D"
max_new_tokens = 40

[[settings]]
kind = "zero_shot_domain"

[[settings]]
kind = "k_shot"
k = 5
domain_known = true
seed = 3
)";

AuditConfig parse(const std::string& text) { return parse_audit_config(text, "/base"); }

std::string replace(std::string text, const std::string& from, const std::string& to) {
  auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

} // namespace

TEST_CASE("a full config parses") {
  auto c = parse(full_config);
  CHECK_NOTHROW(c.validate());
  CHECK(c.corpus_path == fs::path("/base/data/enron.mbox"));
  CHECK(c.corpus_format == MailboxFormat::concatenated);
  CHECK(c.roster_path == fs::path("/base/data/roster.csv"));
  CHECK(c.filters.min_domain_count == 4);
  CHECK(c.backend.kind == BackendKind::mock);
  CHECK(c.backend.mock.match_window == 6);
  CHECK(c.backend.mock.train_on_corpus);
  CHECK(c.backend.mock.training_files == std::vector<fs::path>{"/base/extra/pile.txt"});
  CHECK(c.backend.mock.association);
  CHECK(c.backend.mock.pattern_guess);
  CHECK(c.backend.mock.domain_source == DomainSource::prompt);
  CHECK(c.parallelism == 2);
  CHECK(c.run_seed == 17);
  CHECK(c.output_dir == fs::path("/base/runs/a"));
  REQUIRE(c.settings.size() == 4);
  CHECK(c.settings[0].label() == "Context (100)");
  CHECK(c.settings[1].label() == "0-shot (D)");
  CHECK(c.settings[1].decoding.max_new_tokens == 40);
  CHECK(c.settings[1].seed == 17);
  CHECK(c.settings[3].label() == "5-shot (w/ domain)");
  CHECK(c.settings[3].seed == 3);
}

TEST_CASE("decoding options") {
  auto c = parse(replace(full_config, "kind = \"mock\"", "kind = \"remote\"\nurl = \"http://h:1\"") +
                 "\n[[settings]]\nkind = \"k_shot\"\nk = 2\ndecoding = \"top_k\"\ntop_k = 40\n"
                 "temperature = 0.9\nsampling_seed = 5\n\n[[settings]]\nkind = \"context\"\nlength = 50\n"
                 "decoding = \"beam\"\nnum_beams = 4\nearly_stopping = false\n");
  CHECK_NOTHROW(c.validate());
  CHECK(c.settings[4].label() == "2-shot Top-k");
  CHECK(std::get<TopK>(c.settings[4].decoding.algorithm) == TopK{40, 0.9});
  CHECK(std::get<KShot>(c.settings[4].kind).k == 2);
  CHECK(c.settings[4].decoding.sampling_seed == 5);
  CHECK(std::get<Beam>(c.settings[5].decoding.algorithm) == Beam{4, false});
}

TEST_CASE("invalid configs are rejected") {
  auto invalid = [](const std::string& text) {
    try {
      parse(text).validate();
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  };
  CHECK(invalid("not = [valid toml"));
  CHECK(invalid(replace(full_config, "kind = \"zero_shot_domain\"", "kind = \"four_shot\"")));
  CHECK(invalid(replace(full_config, "variant = \"D\"", "variant = \"E\"")));
  CHECK(invalid(replace(full_config, "kind = \"zero_shot_domain\"", "kind = \"context\"\nlength = 100")));
  CHECK(invalid(replace(full_config, "variant = \"D\"", "variant = \"D\"\ndecoding = \"top_k\"")));
  CHECK(invalid(replace(full_config, "kind = \"mock\"", "kind = \"remote\"")));
  CHECK(invalid(replace(full_config, "kind = \"mock\"", "kind = \"rule\"")));
  CHECK(invalid(replace(full_config, "parallelism = 2", "parallelism = 0")));
  CHECK(invalid(replace(full_config, "format = \"mbox\"", "format = \"pst\"")));
  CHECK(invalid(replace(full_config, "output = \"runs/a\"", "")));
  CHECK(invalid(replace(full_config, "fallback = \"pattern_guess\"", "fallback = \"guess\"")));
  std::string no_settings = full_config;
  no_settings.resize(no_settings.find("[[settings]]"));
  CHECK(invalid(no_settings));
}

TEST_CASE("the rule backend accepts domain-known settings") {
  std::string text = full_config;
  text.resize(text.find("[[settings]]"));
  text = replace(text, "kind = \"mock\"", "kind = \"rule\"");
  text += "[[settings]]\nkind = \"zero_shot_domain\"\n[[settings]]\nkind = \"k_shot\"\nk = 3\ndomain_known = true\n";
  CHECK_NOTHROW(parse(text).validate());
}

TEST_CASE("hash covers results-affecting fields only") {
  auto base = parse(full_config);
  auto h = base.hash();
  CHECK(h.size() == 16);
  CHECK(parse(full_config).hash() == h);
  CHECK(parse(replace(full_config, "parallelism = 2", "parallelism = 8")).hash() == h);
  CHECK(parse(replace(full_config, "output = \"runs/a\"", "output = \"runs/b\"")).hash() == h);
  CHECK(parse(replace(full_config, "seed = 17", "seed = 18")).hash() != h);
  CHECK(parse(replace(full_config, "length = 100", "length = 99")).hash() != h);
  CHECK(parse(replace(full_config, "match_window = 6", "match_window = 7")).hash() != h);
  CHECK(parse(replace(full_config, "min_domain_count = 4", "min_domain_count = 3")).hash() != h);
  CHECK(parse(replace(full_config, "association = true", "association = false")).hash() != h);
  auto remote_a = parse(replace(full_config, "kind = \"mock\"", "kind = \"remote\"\nurl = \"http://a:1\""));
  auto remote_b = parse(replace(full_config, "kind = \"mock\"", "kind = \"remote\"\nurl = \"http://b:2\""));
  CHECK(remote_a.hash() == remote_b.hash());
  CHECK(remote_a.hash() != h);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("mock spec file and environment override") {
  TempDir dir("config");
  spit(dir / "mock.toml", "match_window = 8\ntraining = \"none\"\nassociation = true\nmodel_id = \"toy\"\n");
  spit(dir / "audit.toml", replace(replace(full_config, "[backend.mock]", "mock_spec = \"mock.toml\"\n[unused]"),
                                   "kind = \"mock\"", "kind = \"mock\""));
  auto c = load_audit_config(dir / "audit.toml");
  CHECK(c.backend.mock.match_window == 8);
  CHECK_FALSE(c.backend.mock.train_on_corpus);
  CHECK(c.backend.mock.model_id == "toy");

  setenv("LEAKPROBE_BACKEND_URL", "http://127.0.0.1:9/", 1);
  auto remote = load_audit_config(dir / "audit.toml");
  unsetenv("LEAKPROBE_BACKEND_URL");
  CHECK(remote.backend.kind == BackendKind::remote);
  CHECK(remote.backend.url == "http://127.0.0.1:9/");
  CHECK(remote.hash() != c.hash());
}
