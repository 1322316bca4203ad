#pragma once

#include "leakprobe/email.hpp"
#include "leakprobe/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace leakprobe {

// Stop generating once nothing is memorized or associated.
struct EmptyBabble {};

enum class DomainSource {
  directory, // the domain the directory lists for the person
  prompt,    // the last "@domain" written in the prompt
};

// Guess A1/B6/C9 for a known person whose name appears in the prompt.
struct PatternGuess {
  DomainSource source = DomainSource::directory;
  std::vector<std::pair<PersonName, std::string>> directory; // name -> domain
};

struct MockMemorizerSpec {
  std::vector<std::string> training_corpus;
  int match_window = 5;
  // Present means the mock associates names with addresses.
  std::optional<std::vector<std::pair<PersonName, EmailAddress>>> association_table;
  std::variant<EmptyBabble, PatternGuess> fallback;
  std::string model_id = "mock-memorizer";
  std::string unknown_token = "<unk>";
};

// Deterministic stand-in for a causal LM that has memorized its training
// corpus verbatim. Tokens are whitespace-separated words. Immutable after
// construction.
class MockMemorizer final : public LanguageModel {
public:
  explicit MockMemorizer(MockMemorizerSpec spec);

  ModelMeta meta() const override;
  Tokenization tokenize(std::string_view text) const override;
  // Greedy only; other algorithms throw UnsupportedError.
  CompletionResult complete(std::string_view prompt, const DecodingConfig& config) const override;

  struct Step {
    std::string piece;
    bool glue = false; // continues the prompt's unfinished last word
  };

  // Next token for `text`, or nullopt at end-of-text. Order of precedence:
  // verbatim continuation of the first corpus occurrence of the last
  // match_window words (the last word may be unfinished), then the
  // association table, then the fallback.
  std::optional<Step> step(std::string_view text) const;

private:
  using TokenId = std::int32_t;
  static constexpr TokenId unknown_id = -1;

  struct Position {
    std::uint32_t doc;
    std::uint32_t start;
  };

  struct NameHit {
    std::size_t end_word; // one past the name's last word
    std::string key;
  };

  TokenId id_of(std::string_view word) const;
  std::optional<Step> step_words(const std::vector<std::string>& words, bool partial) const;
  std::optional<Step> memorized(const std::vector<std::string>& words, bool partial) const;
  template <class Map>
  std::optional<NameHit> latest_name(const std::vector<std::string>& words, const Map& names) const;

  MockMemorizerSpec spec_;
  std::unordered_map<std::string, TokenId> vocab_;
  std::vector<std::string> words_;
  std::vector<std::vector<TokenId>> docs_;
  std::unordered_map<std::uint64_t, std::vector<Position>> index_;
  std::unordered_map<std::string, EmailAddress> associations_;
  std::unordered_map<std::string, std::pair<PersonName, std::string>> directory_;
};

// Convenience wrapper building a memorizer for a single step.
std::optional<std::string> mock_step(const MockMemorizerSpec& spec, std::string_view prompt);

std::vector<std::string> split_words(std::string_view text);

} // namespace leakprobe
