#include <doctest.h>

#include <map>
#include <set>

#include "effjudge/corpus.hpp"
#include "effjudge/serialize.hpp"
#include "effjudge/util.hpp"
#include "test_support.hpp"

using namespace effjudge;
using effjudge::test::TempDir;
using effjudge::test::make_record;

TEST_CASE("load_pairs on an empty file returns an empty list") {
  TempDir dir("corpus-empty");
  atomic_write_file(dir.path("pairs.jsonl"), "");
  CHECK(load_pairs(dir.path("pairs.jsonl")).empty());
}

TEST_CASE("a single HH record round-trips through write_pairs/load_pairs") {
  TempDir dir("corpus-single");
  std::vector<PairRecord> records = {make_record("p1", "prob", "a = 1\n", "a = 2\n")};
  write_pairs(records, dir.path("pairs.jsonl"));

  auto loaded = load_pairs(dir.path("pairs.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].pair.scenario == Scenario::HH);
  CHECK(loaded[0].original.text == "a = 1\n");
  CHECK(loaded[0].refined.parent_id == loaded[0].original.sample_id);

  // canonical field order makes a second write byte-identical
  write_pairs(loaded, dir.path("again.jsonl"));
  CHECK(read_file(dir.path("pairs.jsonl")) == read_file(dir.path("again.jsonl")));
}

TEST_CASE("synthesized output survives the full round trip byte-exactly") {
  TempDir dir("corpus-roundtrip");
  auto records = synthesize_pairs(24, 3);
  write_pairs(records, dir.path("a.jsonl"));
  write_pairs(load_pairs(dir.path("a.jsonl")), dir.path("b.jsonl"));
  CHECK(read_file(dir.path("a.jsonl")) == read_file(dir.path("b.jsonl")));
}

TEST_CASE("malformed lines are parse errors naming the line") {
  TempDir dir("corpus-badline");
  std::vector<PairRecord> records = {make_record("p1", "prob", "a\n", "b\n")};
  std::string good = record_to_json_line(records[0]);
  atomic_write_file(dir.path("pairs.jsonl"), good + "\n{not json\n");
  try {
    load_pairs(dir.path("pairs.jsonl"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("sides from different problems are an integrity error") {
  TempDir dir("corpus-problem");
  PairRecord rec = make_record("p1", "prob-a", "a\n", "b\n");
  rec.refined.problem_id = "prob-b";
  atomic_write_file(dir.path("pairs.jsonl"), record_to_json_line(rec) + "\n");
  CHECK_THROWS_AS(load_pairs(dir.path("pairs.jsonl")), IntegrityError);
}

TEST_CASE("scenario must match the sides' sources") {
  PairRecord rec = make_record("p1", "prob", "a\n", "b\n", Source::human(),
                               Source::machine("m"));
  CHECK(rec.pair.scenario == Scenario::HM);
  rec.pair.scenario = Scenario::HH;
  CHECK_THROWS_AS(validate_records({rec}), IntegrityError);
}

TEST_CASE("dangling parent references are an integrity error") {
  PairRecord rec = make_record("p1", "prob", "a\n", "b\n");
  rec.refined.parent_id = "nowhere";
  CHECK_THROWS_AS(validate_records({rec}), IntegrityError);
}

TEST_CASE("empty sample text is rejected") {
  PairRecord rec = make_record("p1", "prob", "a\n", "b\n");
  rec.refined.text.clear();
  CHECK_THROWS_AS(validate_records({rec}), IntegrityError);
}

TEST_CASE("duplicate pair ids are rejected") {
  PairRecord a = make_record("p1", "prob", "a\n", "b\n");
  CHECK_THROWS_AS(validate_records({a, a}), IntegrityError);
}

TEST_CASE("synthesize_pairs is deterministic and valid") {
  auto once = synthesize_pairs(1, 0);
  auto twice = synthesize_pairs(1, 0);
  REQUIRE(once.size() == 1);
  CHECK(record_to_json_line(once[0]) == record_to_json_line(twice[0]));

  auto batch = synthesize_pairs(36, 9);
  validate_records(batch);  // no throw
  CHECK(batch.size() == 36);
}

TEST_CASE("even-sum template tags the stride-2 loop as the winner") {
  SynthOptions options;
  options.languages = {SubjectLanguage::Python};
  options.families = {"even-sum"};
  for (const auto& rec : synthesize_pairs(8, 5, options)) {
    const CodeSample& winner =
        rec.oracle->winner == Winner::RefinedFaster ? rec.refined : rec.original;
    CHECK(winner.text.find("range(2, n + 1, 2)") != std::string::npos);
    CHECK(winner.text.find("if ") == std::string::npos);
    CHECK(rec.oracle->nominal_gain != 1.0);
  }
}

TEST_CASE("unknown template family is a config error") {
  SynthOptions options;
  options.families = {"quantum-sort"};
  CHECK_THROWS_AS(synthesize_pairs(1, 0, options), ConfigError);
}

TEST_CASE("split sends everything to train for (1,0,0)") {
  auto records = synthesize_pairs(12, 1);
  SplitResult r = split(records, SplitSpec{1.0, 0.0, 0.0, 42});
  CHECK(r.train.size() == records.size());
  CHECK(r.val.empty());
  CHECK(r.test.empty());
}

TEST_CASE("pairs sharing a problem land in the same split") {
  std::vector<PairRecord> records = {make_record("p1", "shared", "a\n", "b\n"),
                                     make_record("p2", "shared", "c\n", "d\n"),
                                     make_record("p3", "other", "e\n", "f\n")};
  SplitResult r = split(records, SplitSpec{0.5, 0.0, 0.5, 7});
  auto side_of = [&](const std::string& pair_id) {
    for (const auto& rec : r.train)
      if (rec.pair.pair_id == pair_id) return 0;
    for (const auto& rec : r.test)
      if (rec.pair.pair_id == pair_id) return 2;
    return -1;
  };
  CHECK(side_of("p1") == side_of("p2"));
  CHECK(side_of("p3") != -1);
}

TEST_CASE("split is deterministic and a partition grouped by problem") {
  auto records = synthesize_pairs(120, 77);
  SplitSpec spec{0.6, 0.2, 0.2, 123};
  SplitResult a = split(records, spec);
  SplitResult b = split(records, spec);
  CHECK(a.train.size() == b.train.size());
  CHECK(a.val.size() == b.val.size());
  for (size_t i = 0; i < a.train.size(); ++i)
    CHECK(a.train[i].pair.pair_id == b.train[i].pair.pair_id);

  std::set<std::string> seen;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& rec : *part) CHECK(seen.insert(rec.pair.pair_id).second);
  CHECK(seen.size() == records.size());

  std::map<std::string, int> problem_side;
  int side = 0;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& rec : *part) {
      auto [it, inserted] = problem_side.emplace(rec.original.problem_id, side);
      CHECK(it->second == side);
    }
    ++side;
  }
}

TEST_CASE("split with too few problems errors") {
  std::vector<PairRecord> records = {make_record("p1", "only", "a\n", "b\n")};
  CHECK_THROWS_AS(split(records, SplitSpec{0.5, 0.0, 0.5, 0}), DomainError);
}

TEST_CASE("split spec fractions must sum to one") {
  CHECK_THROWS_AS(SplitSpec({0.5, 0.0, 0.4, 0}).validate(), DomainError);
  CHECK_NOTHROW(SplitSpec({0.5, 0.0, 0.5, 0}).validate());
}

TEST_CASE("dedupe drops pairs identical modulo whitespace") {
  std::vector<PairRecord> records = {
      make_record("p1", "a", "x  =  1\n", "x = 1"),
      make_record("p2", "b", "x = 1\n", "x = 2\n"),
  };
  DedupeResult r = dedupe_pairs(records);
  CHECK(r.dropped == 1);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].pair.pair_id == "p2");
}
