#include <doctest.h>

#include <cmath>
#include <map>

#include "effjudge/executor.hpp"
#include "effjudge/util.hpp"
#include "test_support.hpp"

using namespace effjudge;
using effjudge::test::make_record;
using effjudge::test::make_sample;

TEST_CASE("classify_gain applies the band thresholds exactly") {
  CHECK(classify_gain(0.85).class3 == GainClass::Degradation);
  CHECK(classify_gain(0.9).class3 == GainClass::NonImprovement);
  CHECK(classify_gain(1.0).class3 == GainClass::NonImprovement);
  CHECK(classify_gain(1.1).class3 == GainClass::NonImprovement);
  CHECK(classify_gain(1.7).class3 == GainClass::Improvement);

  CHECK(classify_gain(1.0).winner == Winner::OriginalFaster);  // tie to original
  CHECK(classify_gain(1.0001).winner == Winner::RefinedFaster);
  CHECK(classify_gain(1.0).easy == false);
  CHECK(classify_gain(1.1).easy == false);
  CHECK(classify_gain(1.7).easy == true);
  CHECK(classify_gain(0.85).easy == true);

  CHECK_THROWS_AS(classify_gain(0.0), DomainError);
  CHECK_THROWS_AS(classify_gain(-2.0), DomainError);
}

TEST_CASE("classify_gain partitions the positive axis") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    double g = std::exp(rng.uniform(-3.0, 3.0));
    if (g == 1.0) continue;
    GainBreakdown b = classify_gain(g);
    int hits = (b.class3 == GainClass::Degradation) + (b.class3 == GainClass::NonImprovement) +
               (b.class3 == GainClass::Improvement);
    CHECK(hits == 1);
    CHECK(classify_gain(1.0 / g).winner != b.winner);  // except exactly 1, excluded by sampling
    CHECK(b.easy == (g < 0.9 || g > 1.1));
  }
}

namespace {

// Replays scripted outcomes instead of spawning processes.
class FakePairTimer : public PairTimer {
 public:
  FakePairTimer() : PairTimer(ExecutionConfig::defaults()) {}

  // wall times per (sample_id, run_index 0..3)
  std::map<std::string, std::array<double, 4>> times;
  std::map<std::string, RunVerdict> broken;  // always this verdict

 protected:
  RunOutcome execute(const CodeSample& sample, const TestSuite&, int run_index) override {
    RunOutcome out;
    auto broken_it = broken.find(sample.sample_id);
    if (broken_it != broken.end()) {
      out.verdict = broken_it->second;
      return out;
    }
    out.verdict = RunVerdict::Correct;
    out.wall_time_ms = times.at(sample.sample_id)[static_cast<size_t>(run_index)];
    return out;
  }
};

}  // namespace

TEST_CASE("time_pair computes the label from the three timed runs") {
  PairRecord rec = make_record("p1", "prob", "slow\n", "fast\n");
  FakePairTimer timer;
  timer.times[rec.original.sample_id] = {999.0, 200.0, 202.0, 198.0};
  timer.times[rec.refined.sample_id] = {999.0, 100.0, 101.0, 99.0};

  LabelResult result = timer.time_pair(rec);
  REQUIRE(std::holds_alternative<PairLabel>(result));
  const PairLabel& label = std::get<PairLabel>(result);
  CHECK(label.gain_ratio == doctest::Approx(2.0));
  CHECK(label.class3 == GainClass::Improvement);
  CHECK(label.winner == Winner::RefinedFaster);
  CHECK(label.consistent);
  CHECK(label.easy);
  CHECK(label.times_original_ms[0] == 200.0);  // warm-up run is not recorded
}

TEST_CASE("a slower refinement labels as degradation") {
  PairRecord rec = make_record("p2", "prob", "a\n", "b\n");
  FakePairTimer timer;
  timer.times[rec.original.sample_id] = {1.0, 100.0, 100.0, 100.0};
  timer.times[rec.refined.sample_id] = {1.0, 112.0, 111.0, 113.0};

  const PairLabel& label = std::get<PairLabel>(timer.time_pair(rec));
  CHECK(label.gain_ratio == doctest::Approx(100.0 / 112.0));
  CHECK(label.gain_ratio < 0.9);
  CHECK(label.class3 == GainClass::Degradation);
  CHECK(label.winner == Winner::OriginalFaster);
  CHECK(label.easy);
}

TEST_CASE("mixed per-run signs mark the pair inconsistent") {
  PairRecord rec = make_record("p3", "prob", "a\n", "b\n");
  FakePairTimer timer;
  timer.times[rec.original.sample_id] = {1.0, 100.0, 100.0, 100.0};
  timer.times[rec.refined.sample_id] = {1.0, 90.0, 110.0, 95.0};

  const PairLabel& label = std::get<PairLabel>(timer.time_pair(rec));
  CHECK_FALSE(label.consistent);

  // self-comparison: a zero difference cannot support either side
  timer.times[rec.refined.sample_id] = {1.0, 100.0, 100.0, 100.0};
  const PairLabel& tie = std::get<PairLabel>(timer.time_pair(rec));
  CHECK_FALSE(tie.consistent);
  CHECK(tie.gain_ratio == 1.0);
  CHECK(tie.class3 == GainClass::NonImprovement);
}

TEST_CASE("swapping the sides inverts the gain and flips the winner") {
  PairRecord rec = make_record("p4", "prob", "a\n", "b\n");
  PairRecord swapped = rec;
  std::swap(swapped.original, swapped.refined);
  swapped.original.parent_id.reset();
  swapped.refined.parent_id = swapped.original.sample_id;

  FakePairTimer timer;
  timer.times[rec.original.sample_id] = {1.0, 300.0, 305.0, 295.0};
  timer.times[rec.refined.sample_id] = {1.0, 100.0, 101.0, 99.0};

  const PairLabel& fwd = std::get<PairLabel>(timer.time_pair(rec));
  const PairLabel& rev = std::get<PairLabel>(timer.time_pair(swapped));
  CHECK(fwd.gain_ratio == doctest::Approx(1.0 / rev.gain_ratio));
  CHECK(fwd.winner != rev.winner);
  CHECK(fwd.class3 == GainClass::Improvement);
  CHECK(rev.class3 == GainClass::Degradation);
}

TEST_CASE("any non-correct run yields a failure, not a label") {
  PairRecord rec = make_record("p5", "prob", "a\n", "b\n");
  FakePairTimer timer;
  timer.times[rec.original.sample_id] = {1.0, 100.0, 100.0, 100.0};
  timer.broken[rec.refined.sample_id] = RunVerdict::WrongOutput;

  LabelResult result = timer.time_pair(rec);
  REQUIRE(std::holds_alternative<LabelFailure>(result));
  const LabelFailure& f = std::get<LabelFailure>(result);
  CHECK(f.verdict == RunVerdict::WrongOutput);
  CHECK(f.side == "refined");
}

// --- live executions below; each uses short programs and tight limits ---

namespace {
TestSuite one_case(const std::string& stdin_bytes, const std::string& expected) {
  TestSuite suite;
  suite.test_suite_id = "t";
  suite.time_limit_ms = 5000;
  suite.cases.push_back({stdin_bytes, expected});
  return suite;
}
}  // namespace

TEST_CASE("run_once verdicts: correct, wrong output, timeout, runtime error") {
  ExecutionConfig cfg = ExecutionConfig::defaults();

  CodeSample hello = make_sample("s-hello", "p", "print('hello')\n");
  RunOutcome ok = run_once(hello, one_case("", "hello\n"), cfg);
  CHECK(ok.verdict == RunVerdict::Correct);
  REQUIRE(ok.wall_time_ms.has_value());
  CHECK(*ok.wall_time_ms > 0.0);
  CHECK(*ok.wall_time_ms < 4000.0);

  RunOutcome wrong = run_once(hello, one_case("", "goodbye\n"), cfg);
  CHECK(wrong.verdict == RunVerdict::WrongOutput);

  CodeSample spin = make_sample("s-spin", "p", "while True:\n    pass\n");
  TestSuite quick = one_case("", "");
  quick.time_limit_ms = 1000;
  RunOutcome timeout = run_once(spin, quick, cfg);
  CHECK(timeout.verdict == RunVerdict::Timeout);

  CodeSample crash = make_sample("s-crash", "p", "raise RuntimeError('no')\n");
  RunOutcome err = run_once(crash, one_case("", ""), cfg);
  CHECK(err.verdict == RunVerdict::RuntimeError);
}

TEST_CASE("trailing whitespace does not fail the comparison") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  CodeSample p = make_sample("s-ws", "p", "print('x')\n");
  CHECK(run_once(p, one_case("", "x   \n\n\n"), cfg).verdict == RunVerdict::Correct);
}

TEST_CASE("a missing toolchain is a config error, not a compile error") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  cfg.languages[SubjectLanguage::Python] = {std::nullopt, "no-such-interpreter-xyz {src}"};
  CodeSample p = make_sample("s-cfg", "p", "print(1)\n");
  CHECK_THROWS_AS(run_once(p, one_case("", "1\n"), cfg), ConfigError);
}

TEST_CASE("a C++ program that does not compile is a compile error") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  CodeSample bad = make_sample("s-cc", "p", "int main() { return missing_symbol; }\n",
                               Source::human(), SubjectLanguage::Cpp);
  RunOutcome out = run_once(bad, one_case("", ""), cfg);
  CHECK(out.verdict == RunVerdict::CompileError);
}

TEST_CASE("wall time sums over all cases of the suite") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  CodeSample echo = make_sample("s-echo", "p", "import sys\nsys.stdout.write(sys.stdin.read())\n");
  TestSuite suite;
  suite.test_suite_id = "multi";
  suite.time_limit_ms = 5000;
  suite.cases.push_back({"one\n", "one\n"});
  suite.cases.push_back({"two\n", "two\n"});
  suite.cases.push_back({"three\n", "three\n"});

  RunOutcome multi = run_once(echo, suite, cfg);
  REQUIRE(multi.verdict == RunVerdict::Correct);

  TestSuite single = one_case("one\n", "one\n");
  RunOutcome once = run_once(echo, single, cfg);
  REQUIRE(once.verdict == RunVerdict::Correct);
  CHECK(*multi.wall_time_ms > *once.wall_time_ms);  // three spawns cost more than one

  // a failing later case decides the verdict
  suite.cases[2].expected_stdout_bytes = "wrong\n";
  CHECK(run_once(echo, suite, cfg).verdict == RunVerdict::WrongOutput);
}

TEST_CASE("the {stdin} placeholder hands the input file to the command") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  // read the input from argv[1] instead of the stdin pipe
  cfg.languages[SubjectLanguage::Python] = {std::nullopt, "python3 {src} {stdin}"};
  CodeSample p = make_sample(
      "s-argv", "p", "import sys\nprint(open(sys.argv[1]).read().strip())\n");
  CHECK(run_once(p, one_case("payload\n", "payload\n"), cfg).verdict == RunVerdict::Correct);
}

TEST_CASE("perl subjects run under the default config") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  CodeSample p = make_sample("s-perl", "p", "print \"ok\\n\";\n", Source::human(),
                             SubjectLanguage::Perl);
  CHECK(run_once(p, one_case("", "ok\n"), cfg).verdict == RunVerdict::Correct);
}

TEST_CASE("execution config files overlay the defaults") {
  effjudge::test::TempDir dir("exec-cfg");
  atomic_write_file(dir.path("exec.json"),
                    R"({"time_limit_override_ms": 123,
                        "languages": {"python": {"run": "python3 -O {src}"}}})");
  ExecutionConfig cfg = ExecutionConfig::from_json_file(dir.path("exec.json"));
  CHECK(cfg.time_limit_override_ms == 123);
  CHECK(cfg.languages.at(SubjectLanguage::Python).run == "python3 -O {src}");
  CHECK(cfg.languages.at(SubjectLanguage::Cpp).compile.has_value());  // untouched default
}

TEST_CASE("the closed-form program beats the summation loop") {
  ExecutionConfig cfg = ExecutionConfig::defaults();
  std::string n = "800000";
  std::string expected = "319999600000\n";  // n*(n-1)/2
  CodeSample formula = make_sample("s-f", "p", "N = int(input())\nprint((N*(N-1))//2)\n");
  CodeSample loop = make_sample(
      "s-l", "p", "N = int(input())\ns = 0\nfor i in range(N):\n    s += i\nprint(s)\n");

  RunOutcome fast = run_once(formula, one_case(n + "\n", expected), cfg);
  RunOutcome slow = run_once(loop, one_case(n + "\n", expected), cfg);
  REQUIRE(fast.verdict == RunVerdict::Correct);
  REQUIRE(slow.verdict == RunVerdict::Correct);
  CHECK(*fast.wall_time_ms < *slow.wall_time_ms);
}
