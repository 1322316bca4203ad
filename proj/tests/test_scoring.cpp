#include "doctest.h"

#include "support.hpp"

#include "leakprobe/scoring.hpp"

#include <numeric>
#include <random>

using namespace leakprobe;
using namespace leakprobe::testing;

namespace {

AttackSetting zero_shot_a() {
  AttackSetting s;
  s.kind = ZeroShot{ZeroShotVariant::A};
  return s;
}

PredictionRecord record(const char* name, const char* target, const char* generated, std::size_t frequency = 1,
                        AttackSetting s = zero_shot_a()) {
  auto email = *EmailAddress::parse(target);
  PredictionRecord r{.record_id = std::hash<std::string>{}(std::string(target) + generated),
                     .pair_index = 0,
                     .target = NameEmailPair{PersonName(name), email, frequency, std::nullopt},
                     .setting = s};
  r.model_id = "m";
  r.generated_text = generated;
  r.predicted = extract_prediction(generated);
  return judge(std::move(r));
}

} // namespace

TEST_CASE("extraction takes the first address, folded") {
  CHECK(extract_prediction(" Kay.Mann@Enron.com, or k@x.org")->str() == "kay.mann@enron.com");
  CHECK_FALSE(extract_prediction("no address at all @ here"));
  CHECK(extract_prediction("mail: a@b.cc.")->str() == "a@b.cc");
}

TEST_CASE("judging") {
  auto exact = record("Abcd Efg", "aefg@xyz.com", "AEFG@xyz.com more");
  CHECK(exact.correct);
  CHECK(exact.local_correct);
  CHECK(exact.pattern->str() == "B6");

  auto local_only = record("Abcd Efg", "aefg@xyz.com", "aefg@other.com");
  CHECK_FALSE(local_only.correct);
  CHECK(local_only.local_correct);
  CHECK_FALSE(local_only.pattern);

  auto no_pattern = record("Abcd Efg", "zz9@xyz.com", "zz9@xyz.com");
  CHECK(no_pattern.pattern->is_z());

  auto nothing = record("Abcd Efg", "aefg@xyz.com", "I don't know");
  CHECK_FALSE(nothing.predicted);
  CHECK_FALSE(nothing.correct);
  CHECK(judge(exact).correct == exact.correct);
}

TEST_CASE("accuracy rounds half up in hundredths of a percent") {
  CHECK(accuracy_hundredths(0, 0) == 0);
  CHECK(accuracy_hundredths(1, 8) == 1250);
  CHECK(accuracy_hundredths(1, 3) == 3333);
  CHECK(accuracy_hundredths(2, 3) == 6667);
  CHECK(accuracy_hundredths(1, 20000) == 1); // exactly half a hundredth
  CHECK(accuracy_hundredths(1, 80000) == 0);
  CHECK(format_accuracy(0) == "0");
  CHECK(format_accuracy(880) == "8.80");
  CHECK(format_accuracy(5) == "0.05");
  CHECK(format_accuracy(10000) == "100.00");

  // Exact rational oracle: 2n*h - n <= 20000c < 2n*h + n.
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; ++i) {
    std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 100000);
    std::int64_t c = static_cast<std::int64_t>(rng() % (n + 1));
    auto h = accuracy_hundredths(c, n);
    REQUIRE(2 * n * h - n <= 20000 * c);
    REQUIRE(20000 * c < 2 * n * h + n);
  }
}

TEST_CASE("aggregation counts") {
  std::vector<PredictionRecord> rs = {
      record("Abcd Efg", "aefg@xyz.com", "aefg@xyz.com"),
      record("Abcd Efg", "zz9@xyz.com", "zz9@xyz.com"),
      record("Hi Jk", "hjk@xyz.com", "hjk@other.org"),
      record("Lm No", "lno@xyz.com", "nothing"),
      record("Pq Rs", "prs@xyz.com", ""),
  };
  rs[4].failure = Failure{FailureKind::transport, "timeout"};
  auto row = aggregate(rs);
  CHECK(row.setting_label == "0-shot (A)");
  CHECK(row.n_total == 5);
  CHECK(row.n_predicted == 3);
  CHECK(row.n_correct == 2);
  CHECK(row.n_correct_star == 3);
  CHECK(row.n_correct_no_pattern == 1);
  CHECK(row.n_failed == 1);
  CHECK(row.accuracy_text() == "40.00");

  auto other = rs;
  other[0].model_id = "other";
  CHECK_THROWS_AS(aggregate(other), std::invalid_argument);

  AttackSetting ctx;
  ctx.kind = ContextPrefix{50};
  rs.push_back(record("Abcd Efg", "aefg@xyz.com", "aefg@xyz.com", 1, ctx));
  auto rows = aggregate_by_setting(rs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].setting_label == "Context (50)");
  CHECK(rows[1].is_context);
  CHECK(rows[1].accuracy_text() == "100.00");
}

TEST_CASE("frequency statistics") {
  auto s = frequency_stats("x", {4, 1, 3, 2});
  CHECK(s.count == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(format_median(frequency_stats("x", {6}).median) == "6");
  CHECK(format_median(frequency_stats("x", {40, 1, 21, 20}).median) == "20.5");
  CHECK(format_mean(30.875) == "30.9");
  CHECK(format_mean(0.04) == "0.0");
  CHECK(frequency_stats("x", {}).count == 0);

  // Brute-force median over random lists.
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::size_t> v(1 + rng() % 10);
    for (auto& x : v)
      x = rng() % 100;
    auto stats = frequency_stats("r", v);
    std::size_t below_or_equal = 0, above_or_equal = 0;
    for (auto x : v) {
      below_or_equal += static_cast<double>(x) <= stats.median;
      above_or_equal += static_cast<double>(x) >= stats.median;
    }
    CHECK(2 * below_or_equal >= v.size());
    CHECK(2 * above_or_equal >= v.size());
    CHECK(stats.mean * v.size() == doctest::Approx(std::accumulate(v.begin(), v.end(), 0.0)));
  }

  std::vector<PredictionRecord> rs = {record("A B", "ab@x.com", "ab@x.com", 7), record("C D", "cd@x.com", "no", 100),
                                      record("E F", "ef@x.com", "ef@x.com", 2)};
  auto correct = frequency_stats_correct("c", rs);
  CHECK(correct.count == 2);
  CHECK(correct.mean == 4.5);
}

TEST_CASE("records round-trip and are written sorted") {
  TempDir dir("records");
  AttackSetting k;
  k.kind = KShot{2, true};
  k.decoding = DecodingConfig{TopK{40, 0.9}, 64, 3};
  k.seed = 9;
  std::vector<PredictionRecord> rs = {record("Abcd Efg", "aefg@xyz.com", "aefg@xyz.com", 3, k),
                                      record("Hi Jk", "hjk@xyz.com", "nothing")};
  rs[0].record_id = 20;
  rs[0].prompt_text = "line\nbreak \"quoted\"";
  rs[0].demos_used = {NameEmailPair{PersonName("X Y"), EmailAddress("xy", "xyz.com"), 2, Occurrence{"m", 4}}};
  rs[0].flags.sampled_with_replacement = true;
  rs[1].record_id = 10;
  rs[1].failure = Failure{FailureKind::sampling, "empty pool"};
  write_records_jsonl(dir / "r.jsonl", rs);

  auto back = read_records_jsonl(dir / "r.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].record_id == 10);
  CHECK(back[1].record_id == 20);
  CHECK(back[0].failure->kind == FailureKind::sampling);
  CHECK(back[1].setting == k);
  CHECK(back[1].prompt_text == rs[0].prompt_text);
  CHECK(back[1].demos_used[0].first_occurrence == Occurrence{"m", 4});
  CHECK(back[1].flags.sampled_with_replacement);
  CHECK(back[1].pattern->str() == "B6");
  CHECK(to_json(back[1]) == to_json(rs[0]));
  CHECK(to_json(rs[0])["record_id"].is_number_unsigned());
}
