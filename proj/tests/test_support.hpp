#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "effjudge/corpus.hpp"
#include "effjudge/executor.hpp"
#include "effjudge/types.hpp"

namespace effjudge::test {

inline CodeSample make_sample(std::string id, std::string problem, std::string text,
                              Source source = Source::human(),
                              SubjectLanguage lang = SubjectLanguage::Python) {
  CodeSample s;
  s.sample_id = std::move(id);
  s.problem_id = std::move(problem);
  s.subject_language = lang;
  s.source = std::move(source);
  s.text = std::move(text);
  return s;
}

inline PairRecord make_record(const std::string& pair_id, const std::string& problem,
                              const std::string& orig_text, const std::string& ref_text,
                              Source orig_source = Source::human(),
                              Source ref_source = Source::human()) {
  PairRecord rec;
  rec.original = make_sample(pair_id + "-o", problem, orig_text, orig_source);
  rec.refined = make_sample(pair_id + "-r", problem, ref_text, ref_source);
  rec.refined.parent_id = rec.original.sample_id;
  rec.pair.pair_id = pair_id;
  rec.pair.original_id = rec.original.sample_id;
  rec.pair.refined_id = rec.refined.sample_id;
  rec.pair.scenario = scenario_for(orig_source, ref_source);
  rec.suite.test_suite_id = pair_id + "-t";
  rec.suite.time_limit_ms = 2000;
  rec.suite.cases.push_back({"", ""});
  rec.pair.test_suite_id = rec.suite.test_suite_id;
  return rec;
}

inline PairLabel fabricate_label(const std::string& pair_id, double gain_ratio) {
  PairLabel label;
  label.pair_id = pair_id;
  label.times_original_ms = {100.0 * gain_ratio, 100.0 * gain_ratio, 100.0 * gain_ratio};
  label.times_refined_ms = {100.0, 100.0, 100.0};
  label.gain_ratio = gain_ratio;
  GainBreakdown b = classify_gain(gain_ratio);
  label.class3 = b.class3;
  label.winner = b.winner;
  label.easy = b.easy;
  label.consistent = gain_ratio != 1.0;
  return label;
}

// Synthetic corpus labeled straight from the generator's oracle, so tests
// that need many ground-truth labels never have to execute anything.
inline std::vector<PairRecord> oracle_labeled_corpus(size_t count, uint64_t seed,
                                                     std::vector<std::string> families = {}) {
  SynthOptions options;
  options.languages = {SubjectLanguage::Python};
  options.families = std::move(families);
  std::vector<PairRecord> records = synthesize_pairs(count, seed, options);
  for (auto& rec : records) rec.label = fabricate_label(rec.pair.pair_id, rec.oracle->nominal_gain);
  return records;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("effjudge-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

}  // namespace effjudge::test
