#pragma once

#include <optional>
#include <string>
#include <vector>

#include "effjudge/learned.hpp"
#include "effjudge/refiner.hpp"
#include "effjudge/types.hpp"

namespace effjudge {

struct FewShotExemplar {
  std::string first_text;
  std::string second_text;
  Choice answer = Choice::A;
};

// Demonstrations for few-shot prompting. Build it from the training split
// only; handing it test pairs leaks the answers.
struct FewShotBank {
  std::vector<FewShotExemplar> exemplars;
};

// Picks `size` labeled pairs (deterministic in `seed`) and alternates the
// answer letter A/B so the bank cannot teach a positional shortcut.
FewShotBank build_fewshot_bank(const std::vector<PairRecord>& train_labeled, size_t size,
                               uint64_t seed);

std::string build_classification_prompt(const std::string& first, const std::string& second,
                                        Strategy strategy, const FewShotBank* bank = nullptr);
std::string build_regression_prompt(const std::string& original, const std::string& refined);
std::string build_explanation_prompt(const std::string& original, const std::string& refined,
                                     Winner winner, double improvement_fraction);

// First standalone "A" or "B" token; anything else is an abstention.
std::optional<Choice> parse_choice(const std::string& completion);
// First decimal number; non-positive values count as abstentions.
std::optional<double> parse_first_number(const std::string& completion);

enum class BinaryCall { NoImprovement, Improvement };

// Improvement iff the predicted gain strictly exceeds 1.00.
BinaryCall regression_to_binary(double predicted_gain);
// Same thresholds as the executor's three-way labeling.
GainClass regression_to_class3(double predicted_gain);

struct JudgeInputs {
  CompletionBackend* backend = nullptr;  // prompted strategies
  const JudgeModel* model = nullptr;     // Strategy::Learned
  const FewShotBank* bank = nullptr;     // few-shot strategies
};

JudgeVerdict judge_classify(const PairRecord& record, PresentationOrder order, Strategy strategy,
                            const JudgeInputs& inputs);
// Regression always shows the original as A and the refined as B.
JudgeVerdict judge_regress(const PairRecord& record, Strategy strategy, const JudgeInputs& inputs);

// Renders the explanation prompt for a labeled pair and returns the
// backend's completion verbatim.
std::string explain(const PairRecord& record, double improvement_fraction, Winner winner,
                    CompletionBackend& backend);

}  // namespace effjudge
