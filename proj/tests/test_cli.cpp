#include <doctest.h>

#include <json.hpp>

#include "effjudge/cli.hpp"
#include "effjudge/corpus.hpp"
#include "effjudge/eval.hpp"
#include "effjudge/serialize.hpp"
#include "effjudge/util.hpp"
#include "test_support.hpp"

using namespace effjudge;
using effjudge::test::TempDir;

namespace {

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"effjudge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

nlohmann::json strip_timing(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  if (j.contains("label")) {
    j["label"].erase("times_original_ms");
    j["label"].erase("times_refined_ms");
    j["label"].erase("gain_ratio");
  }
  return j;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({"no-such-subcommand"}) == 2);
  CHECK(cli({"synth", "--count", "1", "--no-such-flag"}) == 2);
  CHECK(cli({}) == 2);
}

TEST_CASE("stage failures exit with 1") {
  TempDir dir("cli-fail");
  CHECK(cli({"label", "--in", dir.path("missing.jsonl"), "--out", dir.path("out.jsonl")}) == 1);
  CHECK(cli({"judge", "--mode", "classify", "--in", dir.path("missing.jsonl"), "--out",
             dir.path("v.jsonl")}) == 1);
}

TEST_CASE("pipeline stages are idempotent modulo timing fields") {
  TempDir dir("cli-pipeline");
  std::string pairs = dir.path("pairs.jsonl");
  REQUIRE(cli({"synth", "--count", "4", "--seed", "3", "--langs", "python", "--families",
               "sum-closed", "--out", pairs}) == 0);
  REQUIRE(cli({"synth", "--count", "4", "--seed", "3", "--langs", "python", "--families",
               "sum-closed", "--out", dir.path("pairs2.jsonl")}) == 0);
  CHECK(read_file(pairs) == read_file(dir.path("pairs2.jsonl")));

  std::string labeled_a = dir.path("labeled_a.jsonl");
  std::string labeled_b = dir.path("labeled_b.jsonl");
  REQUIRE(cli({"label", "--in", pairs, "--out", labeled_a}) == 0);
  REQUIRE(cli({"label", "--in", pairs, "--out", labeled_b}) == 0);

  auto lines_a = read_jsonl_lines(labeled_a);
  auto lines_b = read_jsonl_lines(labeled_b);
  REQUIRE(lines_a.size() == lines_b.size());
  for (size_t i = 0; i < lines_a.size(); ++i)
    CHECK(strip_timing(lines_a[i]) == strip_timing(lines_b[i]));
}

TEST_CASE("train, judge --learned, and eval --flip-runs compose through files") {
  TempDir dir("cli-learned");
  std::string pairs = dir.path("pairs.jsonl");
  REQUIRE(cli({"synth", "--count", "40", "--seed", "9", "--langs", "python", "--out", pairs}) == 0);

  // labels from the oracle keep this test fast; the executor path is
  // covered by the acceptance suite
  auto records = load_pairs(pairs);
  for (auto& rec : records) rec.label = effjudge::test::fabricate_label(rec.pair.pair_id,
                                                                        rec.oracle->nominal_gain);
  std::string labeled = dir.path("labeled.jsonl");
  write_pairs(records, labeled);

  REQUIRE(cli({"split", "--in", labeled, "--train", "0.6", "--val", "0.0", "--test", "0.4",
               "--seed", "4", "--out-prefix", dir.path("ds")}) == 0);

  std::string model = dir.path("model.json");
  REQUIRE(cli({"train", "--mode", "classify", "--in", dir.path("ds.train.jsonl"), "--out", model,
               "--epochs", "150", "--lr", "0.5", "--seed", "6"}) == 0);

  std::string verdicts = dir.path("verdicts.jsonl");
  REQUIRE(cli({"judge", "--mode", "classify", "--strategy", "learned", "--learned", model, "--in",
               dir.path("ds.test.jsonl"), "--out", verdicts, "--order", "random", "--seed",
               "11"}) == 0);

  // judge output appends the verdict to each pair record
  auto verdict_lines = read_jsonl_lines(verdicts);
  REQUIRE(!verdict_lines.empty());
  nlohmann::json first = nlohmann::json::parse(verdict_lines[0]);
  CHECK(first.contains("original"));
  CHECK(first.contains("verdict"));
  auto loaded_verdicts = load_verdicts(verdicts);
  CHECK(loaded_verdicts.size() == verdict_lines.size());

  std::string report_dir = dir.path("report");
  REQUIRE(cli({"eval", "--labels", dir.path("ds.test.jsonl"), "--verdicts", verdicts, "--out-dir",
               report_dir, "--flip-runs", "4", "--flip-seed", "2", "--learned", model}) == 0);

  EvalReport report = report_from_json(read_file(report_dir + "/report.json"));
  REQUIRE(report.flip.has_value());
  CHECK(report.flip->n_runs == 4);
  CHECK(report.flip->variance <= 1e-12);
  CHECK(report.n_pairs == loaded_verdicts.size());

  // report re-emission from the JSON alone
  REQUIRE(cli({"report", "--in", report_dir + "/report.json", "--out-dir",
               dir.path("report2")}) == 0);
  CHECK(read_file(report_dir + "/report.json") == read_file(dir.path("report2") + "/report.json"));
}

TEST_CASE("judge with a scripted backend resolved from the pipeline config") {
  TempDir dir("cli-config");
  std::string pairs = dir.path("pairs.jsonl");
  REQUIRE(cli({"synth", "--count", "4", "--seed", "21", "--langs", "python", "--out", pairs}) == 0);

  nlohmann::json script;
  script["responses"] = {"A", "B", "A", "B"};
  atomic_write_file(dir.path("script.json"), script.dump());
  nlohmann::json pipeline;
  pipeline["backends"] = {{"default", {{"kind", "scripted"}, {"path", dir.path("script.json")}}}};
  pipeline["seed"] = 5;
  atomic_write_file(dir.path("pipeline.json"), pipeline.dump());

  CHECK(cli({"--config", dir.path("pipeline.json"), "judge", "--mode", "classify", "--strategy",
             "zero_shot", "--in", pairs, "--out", dir.path("v.jsonl")}) == 0);
  CHECK(load_verdicts(dir.path("v.jsonl")).size() == 4);

  // a pipeline config referencing a missing file fails before any stage
  nlohmann::json broken;
  broken["exec_config"] = dir.path("nope.json");
  atomic_write_file(dir.path("broken.json"), broken.dump());
  CHECK(cli({"--config", dir.path("broken.json"), "synth", "--count", "1", "--out",
             dir.path("x.jsonl")}) == 1);

  // relative stage paths resolve under the configured data_dir
  nlohmann::json with_dir;
  with_dir["data_dir"] = dir.path("data");
  atomic_write_file(dir.path("dir.json"), with_dir.dump());
  CHECK(cli({"--config", dir.path("dir.json"), "synth", "--count", "1", "--out", "rel.jsonl"}) == 0);
  CHECK(std::filesystem::exists(dir.path("data") + "/rel.jsonl"));
}

TEST_CASE("explain renders through a scripted backend") {
  TempDir dir("cli-explain");
  std::string pairs = dir.path("pairs.jsonl");
  REQUIRE(cli({"synth", "--count", "2", "--seed", "33", "--langs", "python", "--out", pairs}) == 0);
  auto records = load_pairs(pairs);
  for (auto& rec : records)
    rec.label = effjudge::test::fabricate_label(rec.pair.pair_id, rec.oracle->nominal_gain);
  std::string labeled = dir.path("labeled.jsonl");
  write_pairs(records, labeled);

  nlohmann::json script;
  script["responses"] = {"Fewer iterations on the winning side."};
  atomic_write_file(dir.path("script.json"), script.dump());

  REQUIRE(cli({"explain", "--in", labeled, "--pair-id", records[0].pair.pair_id, "--scripted",
               dir.path("script.json"), "--out", dir.path("why.txt")}) == 0);
  CHECK(read_file(dir.path("why.txt")) == "Fewer iterations on the winning side.\n");
}
