#pragma once

#include "leakprobe/email.hpp"

#include "json.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace leakprobe {

enum class PatternClass : std::uint8_t { A, B, C, Z };

// One of the 28 name-to-local-part recipes (A1, B1..B10, C1..C17) or Z for
// "no pattern". Ordered A1 < B1 < ... < B10 < C1 < ... < C17 < Z.
class PatternId {
public:
  static constexpr int count = 28;

  // Throws std::invalid_argument for an index outside the class range.
  PatternId(PatternClass cls, int index);
  static constexpr PatternId z() { return PatternId(count); }
  static constexpr PatternId from_ordinal(int ordinal) { return PatternId(ordinal); }
  static std::optional<PatternId> parse(std::string_view text);

  PatternClass cls() const;
  int index() const;
  int ordinal() const { return ordinal_; }
  bool is_z() const { return ordinal_ == count; }

  // 1, 2 or 3; 0 for Z.
  std::size_t name_token_count() const;
  std::string str() const;

  auto operator<=>(const PatternId&) const = default;

private:
  explicit constexpr PatternId(int ordinal) : ordinal_(ordinal) {}
  int ordinal_;
};

// Recipe over {first}, {middle}, {last} and their initials {f}, {m}, {l}.
std::string_view pattern_recipe(PatternId id);

// Throws std::invalid_argument for Z and IncompatiblePatternError when the
// name's token count differs from the pattern's.
std::string render_local(PatternId id, const PersonName& name);

bool compatible(PatternId id, const PersonName& name);

// Smallest compatible pattern rendering email.local(), else Z.
PatternId classify(const PersonName& name, const EmailAddress& email);

// [{"id": "A1", "name_tokens": 1, "recipe": "{first}", "example_name": ..,
//   "example_local": ..}, ...]
nlohmann::json taxonomy_json();

} // namespace leakprobe
