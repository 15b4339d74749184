#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

enum class RunVerdict { Correct, WrongOutput, Timeout, RuntimeError, CompileError };

std::string to_string(RunVerdict v);

struct RunOutcome {
  RunVerdict verdict = RunVerdict::RuntimeError;
  std::optional<double> wall_time_ms;  // only when Correct; summed over cases
  uint64_t stdout_digest = 0;          // hash of the normalized output
  std::string diagnostic;              // stderr tail or mismatch note
};

struct LanguageCommands {
  std::optional<std::string> compile;  // {src} {bin} placeholders
  std::string run;                     // {src} {bin} {stdin} placeholders
};

struct ExecutionConfig {
  std::map<SubjectLanguage, LanguageCommands> languages;
  std::optional<int64_t> time_limit_override_ms;
  std::string workdir;  // empty: system temp directory
  int64_t compile_timeout_ms = 60000;

  static ExecutionConfig defaults();
  // defaults overlaid with the file's settings
  static ExecutionConfig from_json_file(const std::string& path);
};

struct GainBreakdown {
  GainClass class3 = GainClass::NonImprovement;
  Winner winner = Winner::OriginalFaster;
  bool easy = false;
};

// Total on (0, inf): Degradation below 0.9, NonImprovement on [0.9, 1.1],
// Improvement above 1.1. A tie at exactly 1 goes to the original; the
// easy band is exactly the union of the two outer classes.
GainBreakdown classify_gain(double gain_ratio);

// Compiles (when the language needs it) and runs the sample once over the
// whole suite. A missing toolchain raises ConfigError; a failed compile is
// a CompileError verdict, not an exception.
RunOutcome run_once(const CodeSample& sample, const TestSuite& suite,
                    const ExecutionConfig& config);

struct LabelFailure {
  std::string pair_id;
  RunVerdict verdict = RunVerdict::RuntimeError;  // first non-correct verdict
  std::string side;                               // "original" | "refined"
  std::string detail;
};

using LabelResult = std::variant<PairLabel, LabelFailure>;

// Produces the ground-truth label for one pair: per side one untimed
// warm-up followed by three timed runs, interleaved original/refined.
// Timed sections are serialized process-wide through a single lane, so
// concurrent callers cannot distort each other's measurements. Compilation
// happens once per sample and is never part of the measured time.
class PairTimer {
 public:
  explicit PairTimer(ExecutionConfig config);
  virtual ~PairTimer();

  PairTimer(const PairTimer&) = delete;
  PairTimer& operator=(const PairTimer&) = delete;

  LabelResult time_pair(const PairRecord& record);

  const ExecutionConfig& config() const { return config_; }

 protected:
  // Override point for tests. run_index 0 is the warm-up, 1..3 are timed.
  virtual RunOutcome execute(const CodeSample& sample, const TestSuite& suite, int run_index);

 private:
  ExecutionConfig config_;
  struct ProgramCache;
  std::unique_ptr<ProgramCache> cache_;
};

}  // namespace effjudge
