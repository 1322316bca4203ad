#include "doctest.h"

#include "leakprobe/errors.hpp"
#include "leakprobe/patterns.hpp"

#include <random>

using namespace leakprobe;

namespace {

std::vector<PatternId> all_patterns() {
  std::vector<PatternId> out;
  for (int i = 0; i < PatternId::count; ++i)
    out.push_back(PatternId::from_ordinal(i));
  return out;
}

} // namespace

TEST_CASE("ids parse, print and order") {
  CHECK(PatternId::parse("A1")->ordinal() == 0);
  CHECK(PatternId::parse("B10")->ordinal() == 10);
  CHECK(PatternId::parse("C1")->ordinal() == 11);
  CHECK(PatternId::parse("C17")->ordinal() == 27);
  CHECK(PatternId::parse("Z")->is_z());
  CHECK_FALSE(PatternId::parse("B11"));
  CHECK_FALSE(PatternId::parse("A2"));
  CHECK_FALSE(PatternId::parse("c3"));
  CHECK_THROWS_AS(PatternId(PatternClass::C, 18), std::invalid_argument);
  for (auto id : all_patterns())
    CHECK(PatternId::parse(id.str()) == id);
  CHECK(PatternId(PatternClass::B, 10) < PatternId(PatternClass::C, 1));
  CHECK(PatternId(PatternClass::C, 17) < PatternId::z());
}

TEST_CASE("rendering edge cases") {
  CHECK(render_local(PatternId(PatternClass::B, 6), PersonName("Sara Shackleton")) == "sshackleton");
  CHECK(render_local(PatternId(PatternClass::C, 15), PersonName("Mary Ellen Hain")) == "mary.e.hain");
  // Initials are whole code points; folding is ASCII only, like addresses.
  CHECK(render_local(PatternId(PatternClass::B, 10), PersonName("Émile Zola")) == "\xc3\x89z");
  CHECK_THROWS_AS(render_local(PatternId::z(), PersonName("a b")), std::invalid_argument);
  CHECK_THROWS_AS(render_local(PatternId(PatternClass::A, 1), PersonName("a b")), IncompatiblePatternError);
}

TEST_CASE("classify takes the smallest pattern that renders the local part") {
  PersonName two("Kay Mann");
  CHECK(classify(two, EmailAddress("kay.mann", "x.com")).str() == "B1");
  CHECK(classify(two, EmailAddress("kay", "x.com")).str() == "B4");
  CHECK(classify(two, EmailAddress("mann", "x.com")).str() == "B5");
  CHECK(classify(two, EmailAddress("kay.mann2", "x.com")).is_z());
  CHECK(classify(PersonName("K Mann"), EmailAddress("kmann", "x.com")).str() == "B3");
  CHECK(classify(PersonName("a b c d"), EmailAddress("a", "x.com")).is_z());
  CHECK(classify(PersonName(""), EmailAddress("a", "x.com")).is_z());
}

TEST_CASE("render then classify returns a pattern rendering the same local") {
  std::mt19937_64 rng(7);
  auto word = [&] {
    std::string w(1 + rng() % 6, 'a');
    for (auto& c : w)
      c = static_cast<char>('a' + rng() % 26);
    return w;
  };
  for (int round = 0; round < 2000; ++round) {
    std::vector<std::string> tokens(1 + rng() % 3);
    for (auto& t : tokens)
      t = word();
    PersonName name(tokens);
    for (auto id : all_patterns()) {
      if (!compatible(id, name))
        continue;
      auto local = render_local(id, name);
      auto got = classify(name, EmailAddress(local, "x.org"));
      REQUIRE_FALSE(got.is_z());
      CHECK(got <= id);
      CHECK(render_local(got, name) == local);
    }
  }
}

TEST_CASE("compatibility follows name length") {
  for (auto id : all_patterns()) {
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<std::string> tokens(n, "ab");
      CHECK(compatible(id, PersonName(tokens)) == (id.name_token_count() == n));
    }
  }
  CHECK_FALSE(compatible(PatternId::z(), PersonName("ab")));
}

TEST_CASE("taxonomy json lists every row") {
  auto j = taxonomy_json();
  REQUIRE(j.size() == 28);
  CHECK(j[0]["id"] == "A1");
  CHECK(j[26]["id"] == "C16");
  CHECK(j[26]["example_local"] == "abcd.hiefg");
  CHECK(j[5]["example_local"] == "efg");
}
