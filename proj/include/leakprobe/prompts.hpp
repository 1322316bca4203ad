#pragma once

#include "leakprobe/corpus.hpp"
#include "leakprobe/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace leakprobe {

enum class ZeroShotVariant { A, B, C, D };

struct ContextPrefix {
  int length_tokens = 50;
  bool operator==(const ContextPrefix&) const = default;
};

struct ZeroShot {
  ZeroShotVariant variant = ZeroShotVariant::A;
  bool operator==(const ZeroShot&) const = default;
};

struct ZeroShotWithDomain {
  bool operator==(const ZeroShotWithDomain&) const = default;
};

struct KShot {
  int k = 1;
  bool domain_known = false;
  bool operator==(const KShot&) const = default;
};

using AttackKind = std::variant<ContextPrefix, ZeroShot, ZeroShotWithDomain, KShot>;

struct AttackSetting {
  AttackKind kind;
  DecodingConfig decoding;
  std::uint64_t seed = 0; // demonstration sampling

  void validate() const;

  // "Context (100)", "0-shot (D)", "0-shot (w/ domain)", "2-shot",
  // "5-shot (w/ domain)", with " Top-k" / " Beam" for non-greedy decoding.
  std::string label() const;

  bool is_context() const { return std::holds_alternative<ContextPrefix>(kind); }
  bool domain_known() const;
  // Prompts C and D were shaped after text seen in the training corpus.
  bool training_informed() const;

  bool operator==(const AttackSetting&) const = default;
};

nlohmann::json to_json(const AttackSetting& setting);
AttackSetting setting_from_json(const nlohmann::json& j);

struct PromptFlags {
  bool truncated = false;                // context shorter than requested
  bool nonstandard = false;              // empty unknown token
  bool sampled_with_replacement = false; // pool smaller than k

  bool operator==(const PromptFlags&) const = default;
};

struct PromptInstance {
  std::string text;
  std::vector<NameEmailPair> demos_used;
  PromptFlags flags;
};

// Last `length_tokens` tokens of the body text before the target's first
// occurrence, as the tokenizer detokenizes them. Throws ProvenanceError when
// the occurrence does not resolve.
PromptInstance context_prompt(const NameEmailPair& target, int length_tokens, const Corpus& corpus,
                              const Tokenizer& tokenizer);

PromptInstance zero_shot_prompt(const NameEmailPair& target, ZeroShotVariant variant);
PromptInstance zero_shot_domain_prompt(const NameEmailPair& target, std::string_view unknown_token);

// Draws k demonstrations uniformly without replacement from the eligible pool
// (the pool minus the target, restricted to the target's domain when it is
// known), falling back to drawing with replacement when fewer than k are
// eligible. Throws SamplingError when nothing is eligible.
PromptInstance k_shot_prompt(const NameEmailPair& target, int k, bool domain_known,
                             std::span<const NameEmailPair> pool, std::uint64_t seed);

std::string query_clause(const PersonName& name);
std::string demo_clause(const PersonName& name, const EmailAddress& email);

// Everything a setting may need to build its prompt.
struct PromptSources {
  const Corpus* corpus = nullptr;
  const Tokenizer* tokenizer = nullptr;
  std::span<const NameEmailPair> pool;
  std::string unknown_token;
};

// Per-target demonstration seed.
std::uint64_t demo_seed(std::uint64_t setting_seed, std::size_t target_index);

// Dispatches on the setting kind. Throws ProvenanceError if the resulting text
// would contain the target address.
PromptInstance build_prompt(const AttackSetting& setting, const NameEmailPair& target,
                            std::size_t target_index, const PromptSources& sources);

} // namespace leakprobe
