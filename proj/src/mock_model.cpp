#include "leakprobe/mock_model.hpp"

#include "leakprobe/errors.hpp"
#include "leakprobe/rule_baseline.hpp"

#include <chrono>
#include <limits>
#include <stdexcept>

namespace leakprobe {

namespace {

constexpr std::uint64_t fnv_offset = 14695981039346656037ULL;
constexpr std::uint64_t fnv_prime = 1099511628211ULL;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Lowercased with leading and trailing punctuation removed.
std::string name_word(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && !is_word_char(word[b]))
    ++b;
  while (e > b && !is_word_char(word[e - 1]))
    --e;
  return ascii_lower(word.substr(b, e - b));
}

std::string name_key(const PersonName& name) {
  std::string key;
  for (const auto& t : name.tokens()) {
    if (!key.empty())
      key += ' ';
    key += name_word(t);
  }
  return key;
}

std::uint64_t hash_ids(const std::int32_t* ids, std::size_t n) {
  std::uint64_t h = fnv_offset;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = static_cast<std::uint32_t>(ids[i]);
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= fnv_prime;
    }
  }
  return h;
}

bool mentioned_after(const std::vector<std::string>& words, std::size_t from, const std::string& address) {
  for (std::size_t i = from; i < words.size(); ++i)
    if (icontains(words[i], address))
      return true;
  return false;
}

} // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i]))
      ++i;
    std::size_t b = i;
    while (i < text.size() && !is_space(text[i]))
      ++i;
    if (i > b)
      out.emplace_back(text.substr(b, i - b));
  }
  return out;
}

MockMemorizer::MockMemorizer(MockMemorizerSpec spec) : spec_(std::move(spec)) {
  if (spec_.match_window < 1)
    throw std::invalid_argument("mock match_window must be at least 1");

  for (const auto& text : spec_.training_corpus) {
    std::vector<TokenId> doc;
    for (auto& w : split_words(text)) {
      auto [it, inserted] = vocab_.try_emplace(w, static_cast<TokenId>(words_.size()));
      if (inserted)
        words_.push_back(w);
      doc.push_back(it->second);
    }
    docs_.push_back(std::move(doc));
  }
  if (docs_.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("mock training corpus too large");

  // Keyed on the first match_window - 1 words of every window.
  const auto key_len = static_cast<std::size_t>(spec_.match_window - 1);
  for (std::uint32_t d = 0; d < docs_.size(); ++d) {
    const auto& doc = docs_[d];
    for (std::size_t s = 0; s + key_len < doc.size(); ++s)
      index_[hash_ids(doc.data() + s, key_len)].push_back(Position{d, static_cast<std::uint32_t>(s)});
  }

  if (spec_.association_table)
    for (const auto& [name, email] : *spec_.association_table)
      associations_.try_emplace(name_key(name), email);
  if (auto* guess = std::get_if<PatternGuess>(&spec_.fallback))
    for (const auto& [name, domain] : guess->directory)
      if (!name.empty() && name.size() <= 3)
        directory_.try_emplace(name_key(name), name, domain);
}

ModelMeta MockMemorizer::meta() const { return ModelMeta{spec_.model_id, spec_.unknown_token, 0}; }

MockMemorizer::TokenId MockMemorizer::id_of(std::string_view word) const {
  auto it = vocab_.find(std::string(word));
  return it == vocab_.end() ? unknown_id : it->second;
}

Tokenization MockMemorizer::tokenize(std::string_view text) const {
  Tokenization out;
  for (auto& w : split_words(text)) {
    auto id = id_of(w);
    if (id == unknown_id) {
      // Out-of-vocabulary words get a stable id above the vocabulary.
      std::uint64_t h = fnv_offset;
      for (char c : w) {
        h ^= static_cast<unsigned char>(c);
        h *= fnv_prime;
      }
      out.ids.push_back(static_cast<std::int64_t>(words_.size()) + static_cast<std::int64_t>(h % 1000000007ULL));
    } else {
      out.ids.push_back(id);
    }
    if (!out.detokenized.empty())
      out.detokenized += ' ';
    out.detokenized += w;
  }
  return out;
}

std::optional<MockMemorizer::Step> MockMemorizer::memorized(const std::vector<std::string>& words,
                                                            bool partial) const {
  const auto w = static_cast<std::size_t>(spec_.match_window);
  if (words.size() < w)
    return std::nullopt;
  const std::size_t base = words.size() - w;
  std::vector<TokenId> key(w - 1);
  for (std::size_t i = 0; i + 1 < w; ++i) {
    key[i] = id_of(words[base + i]);
    if (key[i] == unknown_id)
      return std::nullopt;
  }
  auto it = index_.find(hash_ids(key.data(), key.size()));
  if (it == index_.end())
    return std::nullopt;

  const std::string& last = words.back();
  const TokenId last_id = id_of(last);
  if (!partial && last_id == unknown_id)
    return std::nullopt;

  for (const auto& pos : it->second) {
    const auto& doc = docs_[pos.doc];
    if (!std::equal(key.begin(), key.end(), doc.begin() + pos.start))
      continue;
    const std::size_t at = pos.start + w - 1;
    const std::string& corpus_word = words_[doc[at]];
    if (partial) {
      if (!corpus_word.starts_with(last))
        continue;
      if (corpus_word.size() > last.size())
        return Step{corpus_word.substr(last.size()), true};
    } else if (doc[at] != last_id) {
      continue;
    }
    if (at + 1 >= doc.size())
      return Step{}; // memorized up to end of document: end-of-text
    return Step{words_[doc[at + 1]], false};
  }
  return std::nullopt;
}

template <class Map>
std::optional<MockMemorizer::NameHit> MockMemorizer::latest_name(const std::vector<std::string>& words,
                                                                 const Map& names) const {
  if (names.empty())
    return std::nullopt;
  for (std::size_t end = words.size(); end > 0; --end) {
    for (std::size_t n = std::min<std::size_t>(3, end); n >= 1; --n) {
      std::string key;
      bool ok = true;
      for (std::size_t i = end - n; i < end && ok; ++i) {
        auto part = name_word(words[i]);
        ok = !part.empty();
        if (!key.empty())
          key += ' ';
        key += part;
      }
      if (ok && names.contains(key))
        return NameHit{end, key};
    }
  }
  return std::nullopt;
}

std::optional<MockMemorizer::Step> MockMemorizer::step_words(const std::vector<std::string>& words,
                                                             bool partial) const {
  if (auto hit = memorized(words, partial)) {
    if (hit->piece.empty())
      return std::nullopt;
    return hit;
  }

  if (spec_.association_table) {
    if (auto hit = latest_name(words, associations_)) {
      const auto address = associations_.at(hit->key).str();
      if (!mentioned_after(words, hit->end_word, address))
        return Step{address, false};
      return std::nullopt;
    }
  }

  if (auto* guess = std::get_if<PatternGuess>(&spec_.fallback)) {
    if (auto hit = latest_name(words, directory_)) {
      const auto& [name, listed_domain] = directory_.at(hit->key);
      std::string domain = listed_domain;
      if (guess->source == DomainSource::prompt) {
        std::string text;
        for (const auto& w : words)
          text += w + ' ';
        auto mentioned = last_domain_mention(text);
        if (!mentioned)
          return std::nullopt;
        domain = *mentioned;
      }
      if (domain.find('.') == std::string::npos)
        return std::nullopt;
      const auto address = rule_zero_shot(name, domain).str();
      if (!mentioned_after(words, hit->end_word, address))
        return Step{address, false};
    }
  }
  return std::nullopt;
}

std::optional<MockMemorizer::Step> MockMemorizer::step(std::string_view text) const {
  const bool partial = !text.empty() && !is_space(text.back());
  return step_words(split_words(text), partial);
}

CompletionResult MockMemorizer::complete(std::string_view prompt, const DecodingConfig& config) const {
  if (!config.is_greedy())
    throw UnsupportedError("the mock memorizer supports greedy decoding only");
  config.validate();
  if (prompt.empty())
    throw std::invalid_argument("prompt must not be empty");

  const auto started = std::chrono::steady_clock::now();
  auto words = split_words(prompt);
  bool partial = !is_space(prompt.back());
  bool ends_with_space = !partial;

  CompletionResult result;
  result.model_id = spec_.model_id;
  while (result.token_count < config.max_new_tokens) {
    auto next = step_words(words, partial);
    if (!next)
      break;
    if (next->glue) {
      words.back() += next->piece;
      result.generated_text += next->piece;
    } else {
      if (!ends_with_space)
        result.generated_text += ' ';
      result.generated_text += next->piece;
      words.push_back(next->piece);
    }
    ends_with_space = false;
    partial = false;
    ++result.token_count;
  }
  result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                          .count();
  return result;
}

std::optional<std::string> mock_step(const MockMemorizerSpec& spec, std::string_view prompt) {
  MockMemorizer model(spec);
  auto next = model.step(prompt);
  if (!next)
    return std::nullopt;
  return next->piece;
}

} // namespace leakprobe
