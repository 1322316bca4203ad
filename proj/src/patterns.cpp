#include "leakprobe/patterns.hpp"

#include "leakprobe/errors.hpp"

#include <stdexcept>

namespace leakprobe {

namespace {

struct Rule {
  const char* id;
  const char* recipe;
};

// Order is the PatternId ordering. B5 and C8 take the last name alone.
constexpr std::array<Rule, PatternId::count> rules{{
    {"A1", "{first}"},
    {"B1", "{first}.{last}"},
    {"B2", "{first}_{last}"},
    {"B3", "{first}{last}"},
    {"B4", "{first}"},
    {"B5", "{last}"},
    {"B6", "{f}{last}"},
    {"B7", "{first}{l}"},
    {"B8", "{l}{first}"},
    {"B9", "{last}{f}"},
    {"B10", "{f}{l}"},
    {"C1", "{first}.{last}"},
    {"C2", "{first}_{last}"},
    {"C3", "{first}{last}"},
    {"C4", "{first}.{middle}.{last}"},
    {"C5", "{first}_{middle}_{last}"},
    {"C6", "{first}{middle}{last}"},
    {"C7", "{first}"},
    {"C8", "{last}"},
    {"C9", "{f}{last}"},
    {"C10", "{first}{l}"},
    {"C11", "{l}{first}"},
    {"C12", "{last}{f}"},
    {"C13", "{f}{m}{last}"},
    {"C14", "{f}{middle}{last}"},
    {"C15", "{first}.{m}.{last}"},
    {"C16", "{first}.{middle}{last}"},
    {"C17", "{f}{m}{l}"},
}};

constexpr int b_begin = 1;
constexpr int c_begin = 11;

// First UTF-8 code point of a token.
std::string initial(const std::string& token) {
  if (token.empty())
    return {};
  auto lead = static_cast<unsigned char>(token[0]);
  std::size_t len = 1;
  if (lead >= 0xF0)
    len = 4;
  else if (lead >= 0xE0)
    len = 3;
  else if (lead >= 0xC0)
    len = 2;
  return token.substr(0, std::min(len, token.size()));
}

std::string expand(std::string_view recipe, const std::vector<std::string>& tokens) {
  const std::string& first = tokens.front();
  const std::string& last = tokens.back();
  const std::string none;
  const std::string& middle = tokens.size() == 3 ? tokens[1] : none;

  std::string out;
  for (std::size_t i = 0; i < recipe.size();) {
    if (recipe[i] != '{') {
      out += recipe[i++];
      continue;
    }
    auto close = recipe.find('}', i);
    auto key = recipe.substr(i + 1, close - i - 1);
    if (key == "first")
      out += first;
    else if (key == "middle")
      out += middle;
    else if (key == "last")
      out += last;
    else if (key == "f")
      out += initial(first);
    else if (key == "m")
      out += initial(middle);
    else if (key == "l")
      out += initial(last);
    i = close + 1;
  }
  return out;
}

} // namespace

PatternId::PatternId(PatternClass cls, int index) : ordinal_(-1) {
  switch (cls) {
  case PatternClass::A:
    if (index == 1)
      ordinal_ = 0;
    break;
  case PatternClass::B:
    if (index >= 1 && index <= 10)
      ordinal_ = b_begin + index - 1;
    break;
  case PatternClass::C:
    if (index >= 1 && index <= 17)
      ordinal_ = c_begin + index - 1;
    break;
  case PatternClass::Z:
    if (index == 0)
      ordinal_ = count;
    break;
  }
  if (ordinal_ < 0)
    throw std::invalid_argument("no such pattern index " + std::to_string(index));
}

std::optional<PatternId> PatternId::parse(std::string_view text) {
  if (text == "Z")
    return z();
  for (int i = 0; i < count; ++i)
    if (text == rules[i].id)
      return PatternId(i);
  return std::nullopt;
}

PatternClass PatternId::cls() const {
  if (ordinal_ == 0)
    return PatternClass::A;
  if (ordinal_ < c_begin)
    return PatternClass::B;
  if (ordinal_ < count)
    return PatternClass::C;
  return PatternClass::Z;
}

int PatternId::index() const {
  switch (cls()) {
  case PatternClass::A:
    return 1;
  case PatternClass::B:
    return ordinal_ - b_begin + 1;
  case PatternClass::C:
    return ordinal_ - c_begin + 1;
  case PatternClass::Z:
    return 0;
  }
  return 0;
}

std::size_t PatternId::name_token_count() const {
  switch (cls()) {
  case PatternClass::A:
    return 1;
  case PatternClass::B:
    return 2;
  case PatternClass::C:
    return 3;
  case PatternClass::Z:
    return 0;
  }
  return 0;
}

std::string PatternId::str() const { return is_z() ? std::string("Z") : std::string(rules[ordinal_].id); }

std::string_view pattern_recipe(PatternId id) { return id.is_z() ? std::string_view{} : rules[id.ordinal()].recipe; }

bool compatible(PatternId id, const PersonName& name) {
  return !id.is_z() && id.name_token_count() == name.size();
}

std::string render_local(PatternId id, const PersonName& name) {
  if (id.is_z())
    throw std::invalid_argument("pattern Z has no rendering");
  if (!compatible(id, name))
    throw IncompatiblePatternError("pattern " + id.str() + " needs " + std::to_string(id.name_token_count()) +
                                   " name tokens, got " + std::to_string(name.size()));
  return expand(rules[id.ordinal()].recipe, name.folded_tokens());
}

PatternId classify(const PersonName& name, const EmailAddress& email) {
  if (name.empty() || name.size() > 3)
    return PatternId::z();
  const auto tokens = name.folded_tokens();
  for (int i = 0; i < PatternId::count; ++i) {
    auto id = PatternId::from_ordinal(i);
    if (id.name_token_count() == tokens.size() && expand(rules[i].recipe, tokens) == email.local())
      return id;
  }
  return PatternId::z();
}

nlohmann::json taxonomy_json() {
  static const std::array<const char*, 4> examples{"", "abcd", "abcd efg", "abcd hi efg"};
  auto table = nlohmann::json::array();
  for (int i = 0; i < PatternId::count; ++i) {
    auto id = PatternId::from_ordinal(i);
    PersonName example(examples[id.name_token_count()]);
    table.push_back({{"id", id.str()},
                     {"name_tokens", id.name_token_count()},
                     {"recipe", rules[i].recipe},
                     {"example_name", example.display()},
                     {"example_local", render_local(id, example)}});
  }
  return table;
}

} // namespace leakprobe
