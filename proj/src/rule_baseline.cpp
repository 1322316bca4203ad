#include "leakprobe/rule_baseline.hpp"

#include <array>
#include <stdexcept>

namespace leakprobe {

Demonstration make_demonstration(NameEmailPair pair) {
  auto pattern = classify(pair.name, pair.email);
  return Demonstration{std::move(pair), pattern};
}

EmailAddress rule_zero_shot(const PersonName& name, std::string_view domain) {
  PatternId id = PatternId::z();
  switch (name.size()) {
  case 1:
    id = PatternId(PatternClass::A, 1);
    break;
  case 2:
    id = PatternId(PatternClass::B, 6);
    break;
  case 3:
    id = PatternId(PatternClass::C, 9);
    break;
  default:
    throw std::invalid_argument("rule baseline needs a 1-3 token name");
  }
  return EmailAddress(render_local(id, name), domain);
}

PatternId vote_pattern(const PersonName& name, std::span<const Demonstration> demos) {
  std::array<int, PatternId::count> votes{};
  for (const auto& d : demos)
    if (compatible(d.pattern, name))
      ++votes[d.pattern.ordinal()];

  int best = -1;
  for (int i = 0; i < PatternId::count; ++i)
    if (votes[i] > 0 && (best < 0 || votes[i] > votes[best]))
      best = i;
  return best < 0 ? PatternId::z() : PatternId::from_ordinal(best);
}

EmailAddress rule_k_shot(const PersonName& name, std::string_view domain,
                         std::span<const Demonstration> demos) {
  auto id = vote_pattern(name, demos);
  if (id.is_z())
    return rule_zero_shot(name, domain);
  return EmailAddress(render_local(id, name), domain);
}

} // namespace leakprobe
