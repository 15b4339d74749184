#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

struct JoinedPair {
  const PairRecord* record = nullptr;    // always carries a label
  const JudgeVerdict* verdict = nullptr;
};

// Joins verdicts to labeled records by pair_id. Verdicts without a label,
// duplicated verdicts, and records without labels all raise JoinError;
// labeled records without a verdict are simply not part of the join.
std::vector<JoinedPair> join_verdicts(const std::vector<PairRecord>& labeled,
                                      const std::vector<JudgeVerdict>& verdicts);

// Correctness of one verdict against ground truth. Classification compares
// the letter against correct_letter(order, winner); regression applies the
// 1.00 cutoff and compares the implied improvement call. Abstentions are
// never correct.
bool verdict_correct(const JoinedPair& jp);

struct SliceResult {
  size_t n = 0;
  std::optional<double> accuracy;  // empty slice -> no value, not 0
};

using JoinFilter = std::function<bool(const JoinedPair&)>;

SliceResult accuracy(const std::vector<JoinedPair>& joined, const JoinFilter& filter);

JoinFilter filter_all();
JoinFilter filter_easy();
JoinFilter filter_language(SubjectLanguage lang);
JoinFilter filter_scenario(Scenario scenario);
JoinFilter filter_refiner(const std::string& model_name);  // refined side's machine model
JoinFilter filter_source_kind(Source::Kind refined_kind);  // Acc(H) / Acc(M) split

// Spearman's rho with mid-rank ties. Empty optional when either side is
// constant (rank correlation undefined); DomainError below two points.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

struct BucketRow {
  double lo = 0.0;                 // exclusive, except the first bucket
  double hi = 0.0;                 // inclusive; +inf for the last bucket
  size_t n = 0;
  std::optional<double> accuracy;
};

// Buckets pairs by |gain_ratio - 1|; edges must be strictly increasing.
std::vector<BucketRow> bucketize(const std::vector<JoinedPair>& joined,
                                 const std::vector<double>& edges);

struct FlipStats {
  double mean_accuracy = 0.0;
  double variance = 0.0;
  size_t n_runs = 0;
};

using JudgeRunner =
    std::function<std::vector<JudgeVerdict>(const std::vector<PairRecord>&, uint64_t seed)>;

// Re-judges the whole set once per seed under independently randomized
// presentation orders and reports mean/variance of overall accuracy.
FlipStats flip_test(const JudgeRunner& runner, const std::vector<PairRecord>& labeled,
                    const std::vector<uint64_t>& seeds);

struct ScenarioRow {
  Scenario scenario = Scenario::HH;
  size_t n = 0;
  double avg_gain = 0.0;
  double degrade_pct = 0.0;  // class3 fractions, in percent
  double improve_pct = 0.0;
};

std::vector<ScenarioRow> scenario_stats(const std::vector<PairRecord>& labeled);

struct SliceAcc {
  std::string key;
  size_t n = 0;
  std::optional<double> accuracy;
};

struct EvalReport {
  JudgeMode mode = JudgeMode::Classify;
  size_t n_pairs = 0;
  std::optional<double> accuracy_overall;
  size_t n_easy = 0;
  std::optional<double> accuracy_easy;
  std::vector<SliceAcc> by_language;
  std::vector<SliceAcc> by_scenario;
  std::vector<SliceAcc> by_refiner;
  std::vector<SliceAcc> by_source;
  std::optional<double> spearman_rho;        // regress mode
  std::optional<double> class3_accuracy;     // regress mode
  double abstention_rate = 0.0;
  std::vector<BucketRow> buckets;
  std::optional<FlipStats> flip;
  std::vector<ScenarioRow> scenarios;
  std::vector<std::pair<double, double>> rank_scatter;  // (actual rank, predicted rank)
};

struct EvalOptions {
  std::vector<double> bucket_edges = {0.05, 0.1, 0.2, 0.5, 1.0};
};

EvalReport compute_report(const std::vector<PairRecord>& labeled,
                          const std::vector<JudgeVerdict>& verdicts,
                          const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);

// Writes report.json plus one CSV per table (main, scenario, refiner,
// buckets, flip) and the rank scatter TSV for external plotting.
void emit_report(const EvalReport& report, const std::string& out_dir);

}  // namespace effjudge
