#pragma once

#include "json.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace leakprobe {

struct Greedy {
  bool operator==(const Greedy&) const = default;
};

struct TopK {
  int k = 50;
  double temperature = 0.7;
  bool operator==(const TopK&) const = default;
};

struct Beam {
  int width = 5;
  bool early_stopping = true;
  bool operator==(const Beam&) const = default;
};

struct DecodingConfig {
  std::variant<Greedy, TopK, Beam> algorithm = Greedy{};
  int max_new_tokens = 100;
  std::uint64_t sampling_seed = 0; // TopK only

  // Throws std::invalid_argument on k < 1, temperature <= 0, width < 1 or
  // max_new_tokens < 1.
  void validate() const;

  bool is_greedy() const { return std::holds_alternative<Greedy>(algorithm); }

  // "", " Top-k" or " Beam"; appended to setting labels.
  std::string label_suffix() const;

  bool operator==(const DecodingConfig&) const = default;
};

// The "decoding" object of the completion request. Fields that do not apply
// to the algorithm are omitted.
nlohmann::json decoding_to_wire(const DecodingConfig& config);
DecodingConfig decoding_from_wire(const nlohmann::json& decoding, int max_new_tokens);

struct CompletionResult {
  std::string generated_text; // continuation only
  int token_count = 0;
  std::string model_id;
  std::int64_t latency_ms = 0;
};

struct Tokenization {
  std::vector<std::int64_t> ids;
  std::string detokenized;
};

struct ModelMeta {
  std::string model_id;
  std::string unknown_token;
  int max_context = 0;
};

class Tokenizer {
public:
  virtual ~Tokenizer() = default;
  virtual Tokenization tokenize(std::string_view text) const = 0;
};

// Implementations are safe to call from several threads at once.
class LanguageModel : public Tokenizer {
public:
  virtual ModelMeta meta() const = 0;
  virtual CompletionResult complete(std::string_view prompt, const DecodingConfig& config) const = 0;
};

} // namespace leakprobe
