#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace effjudge {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(category + ": " + msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& msg) : Error("integrity", msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

class JoinError : public Error {
 public:
  explicit JoinError(const std::string& msg) : Error("join", msg) {}
};

class BackendError : public Error {
 public:
  BackendError(const std::string& msg, bool retryable)
      : Error("backend", msg), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// Completion contained no extractable program.
class RefinementParseError : public Error {
 public:
  explicit RefinementParseError(const std::string& msg) : Error("refinement-parse", msg) {}
};

// ---------------------------------------------------------------------------
// Code samples and pairs

// Language of the code under test; unrelated to the language this tool is
// written in.
enum class SubjectLanguage { Python, Cpp, Ruby, Perl, Rust };

std::string to_string(SubjectLanguage lang);
SubjectLanguage subject_language_from_string(const std::string& s);

struct Source {
  enum class Kind { Human, Machine };
  Kind kind = Kind::Human;
  std::string model_name;  // set only for Machine

  static Source human() { return {Kind::Human, {}}; }
  static Source machine(std::string model) { return {Kind::Machine, std::move(model)}; }
  bool is_machine() const { return kind == Kind::Machine; }
  bool operator==(const Source&) const = default;
};

std::string to_string(const Source& s);
Source source_from_string(const std::string& s);

struct CodeSample {
  std::string sample_id;
  std::string problem_id;
  SubjectLanguage subject_language = SubjectLanguage::Python;
  Source source;
  std::string text;
  std::optional<std::string> parent_id;  // sample this one was refined from
};

enum class Scenario { HH, HM, MM };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Scenario implied by the two sides' sources. Machine-original with a
// human refinement has no scenario in this task; throws IntegrityError.
Scenario scenario_for(const Source& original, const Source& refined);

struct TestCase {
  std::string stdin_bytes;
  std::string expected_stdout_bytes;
};

struct TestSuite {
  std::string test_suite_id;
  std::vector<TestCase> cases;
  int64_t time_limit_ms = 0;  // per case
};

struct CodePair {
  std::string pair_id;
  std::string original_id;
  std::string refined_id;
  Scenario scenario = Scenario::HH;
  std::string test_suite_id;
};

struct SplitSpec {
  double train_fraction = 1.0;
  double val_fraction = 0.0;
  double test_fraction = 0.0;
  uint64_t seed = 0;

  void validate() const;  // throws DomainError
};

// ---------------------------------------------------------------------------
// Ground-truth labels

enum class GainClass { Degradation, NonImprovement, Improvement };
enum class Winner { OriginalFaster, RefinedFaster };

std::string to_string(GainClass c);
GainClass gain_class_from_string(const std::string& s);
std::string to_string(Winner w);
Winner winner_from_string(const std::string& s);

struct PairLabel {
  std::string pair_id;
  std::array<double, 3> times_original_ms{};
  std::array<double, 3> times_refined_ms{};
  double gain_ratio = 1.0;  // median(original) / median(refined)
  GainClass class3 = GainClass::NonImprovement;
  Winner winner = Winner::OriginalFaster;
  bool consistent = false;
  bool easy = false;
};

// Synthetic ground truth attached by the pair generator; read only by tests
// and controlled-corpus experiments, never by judges.
struct SynthOracle {
  Winner winner = Winner::RefinedFaster;
  double nominal_gain = 1.0;
};

// One line of a pair dataset file.
struct PairRecord {
  CodePair pair;
  CodeSample original;
  CodeSample refined;
  TestSuite suite;
  std::optional<SynthOracle> oracle;
  std::optional<PairLabel> label;
};

// ---------------------------------------------------------------------------
// Judge verdicts

enum class JudgeMode { Classify, Regress };
enum class Strategy { ZeroShot, FewShot, ZeroShotCoT, FewShotCoT, Learned };
enum class SlotOrder { OriginalFirst, RefinedFirst };
enum class Choice { A, B };

std::string to_string(JudgeMode m);
JudgeMode judge_mode_from_string(const std::string& s);
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(SlotOrder o);
SlotOrder slot_order_from_string(const std::string& s);
std::string to_string(Choice c);

struct PresentationOrder {
  SlotOrder order = SlotOrder::OriginalFirst;
  std::optional<uint64_t> seed;  // present when the order was randomized
};

struct JudgeVerdict {
  std::string pair_id;
  JudgeMode mode = JudgeMode::Classify;
  std::optional<Choice> choice;          // Classify; empty = abstention
  std::optional<double> predicted_gain;  // Regress; empty = abstention
  std::string raw_output;
  Strategy strategy = Strategy::ZeroShot;
  SlotOrder order = SlotOrder::OriginalFirst;  // how the pair was shown
};

// The letter a correct judge must answer given how the pair was shown and
// which side truly won. Flipping the order flips the letter.
Choice correct_letter(SlotOrder order, Winner winner);

// Presentation order drawn from a stable hash of (pair_id, seed): the same
// dataset and seed always shuffle the same way.
SlotOrder randomized_slot_order(std::string_view pair_id, uint64_t seed);

}  // namespace effjudge
