#pragma once

#include "leakprobe/corpus.hpp"
#include "leakprobe/patterns.hpp"

#include <span>
#include <string_view>

namespace leakprobe {

struct Demonstration {
  NameEmailPair pair;
  PatternId pattern;
};

Demonstration make_demonstration(NameEmailPair pair);

// A1, B6 or C9 depending on the name length, joined with the given domain.
EmailAddress rule_zero_shot(const PersonName& name, std::string_view domain);

// Most frequent demo pattern among those compatible with `name`; ties go to
// the smallest PatternId. Z when nothing is compatible.
PatternId vote_pattern(const PersonName& name, std::span<const Demonstration> demos);

EmailAddress rule_k_shot(const PersonName& name, std::string_view domain,
                         std::span<const Demonstration> demos);

} // namespace leakprobe
