#include "effjudge/judge.hpp"

#include <cctype>
#include <cstdio>

#include "effjudge/executor.hpp"
#include "effjudge/util.hpp"

namespace effjudge {

namespace {

std::string classification_query(const std::string& first, const std::string& second) {
  return "Given a selection of code, determine which one is the most efficient in computing.\n"
         "A: " + first + "\nB: " + second;
}

constexpr const char* kCotLine = "Let's think step by step";

}  // namespace

FewShotBank build_fewshot_bank(const std::vector<PairRecord>& train_labeled, size_t size,
                               uint64_t seed) {
  std::vector<size_t> indices;
  for (size_t i = 0; i < train_labeled.size(); ++i)
    if (train_labeled[i].label) indices.push_back(i);
  if (indices.size() < size)
    throw DomainError("need " + std::to_string(size) + " labeled pairs for the bank, have " +
                      std::to_string(indices.size()));
  Rng rng(seed);
  rng.shuffle(indices);

  FewShotBank bank;
  for (size_t k = 0; k < size; ++k) {
    const PairRecord& rec = train_labeled[indices[k]];
    Choice target = (k % 2 == 0) ? Choice::A : Choice::B;
    SlotOrder order = correct_letter(SlotOrder::OriginalFirst, rec.label->winner) == target
                          ? SlotOrder::OriginalFirst
                          : SlotOrder::RefinedFirst;
    FewShotExemplar ex;
    ex.first_text = order == SlotOrder::OriginalFirst ? rec.original.text : rec.refined.text;
    ex.second_text = order == SlotOrder::OriginalFirst ? rec.refined.text : rec.original.text;
    ex.answer = target;
    bank.exemplars.push_back(std::move(ex));
  }
  return bank;
}

std::string build_classification_prompt(const std::string& first, const std::string& second,
                                        Strategy strategy, const FewShotBank* bank) {
  if (first.empty() || second.empty()) throw DomainError("prompt needs non-empty code texts");
  bool few_shot = strategy == Strategy::FewShot || strategy == Strategy::FewShotCoT;
  bool cot = strategy == Strategy::ZeroShotCoT || strategy == Strategy::FewShotCoT;
  if (strategy == Strategy::Learned) throw DomainError("learned strategy has no prompt");

  std::string prompt;
  if (few_shot) {
    if (bank == nullptr || bank->exemplars.empty()) throw DomainError("few-shot bank is empty");
    for (const auto& ex : bank->exemplars) {
      prompt += classification_query(ex.first_text, ex.second_text);
      prompt += '\n';
      prompt += to_string(ex.answer);
      prompt += "\n\n";
    }
  }
  prompt += classification_query(first, second);
  if (cot) {
    prompt += '\n';
    prompt += kCotLine;
  }
  return prompt;
}

std::string build_regression_prompt(const std::string& original, const std::string& refined) {
  if (original.empty() || refined.empty()) throw DomainError("prompt needs non-empty code texts");
  return "Given two sets of code, assess how much Code B has improved compared to Code A.\n"
         "A. " + original + "\nB. " + refined;
}

std::string build_explanation_prompt(const std::string& original, const std::string& refined,
                                     Winner winner, double improvement_fraction) {
  const char* x = winner == Winner::OriginalFaster ? "A" : "B";
  const char* y = winner == Winner::OriginalFaster ? "B" : "A";
  return std::string("We compared the efficiency in computing of codes A and B. As a result, code ") +
         x + " was more efficient than " + y + ". The improvement fraction is " +
         format_gain(improvement_fraction) + ". Explain why this might be the case.\n\n" +
         "# Code A\n" + original + "\n# Code B\n" + refined;
}

std::optional<Choice> parse_choice(const std::string& completion) {
  size_t i = 0;
  auto ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while (i < completion.size()) {
    if (!ident(completion[i])) {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < completion.size() && ident(completion[i])) ++i;
    if (i - start == 1) {
      if (completion[start] == 'A') return Choice::A;
      if (completion[start] == 'B') return Choice::B;
    }
  }
  return std::nullopt;
}

std::optional<double> parse_first_number(const std::string& completion) {
  size_t i = 0;
  while (i < completion.size() && !std::isdigit(static_cast<unsigned char>(completion[i]))) ++i;
  if (i == completion.size()) return std::nullopt;
  bool negative = i > 0 && completion[i - 1] == '-';
  double value = 0.0;
  while (i < completion.size() && std::isdigit(static_cast<unsigned char>(completion[i]))) {
    value = value * 10.0 + (completion[i] - '0');
    ++i;
  }
  if (i < completion.size() && completion[i] == '.' && i + 1 < completion.size() &&
      std::isdigit(static_cast<unsigned char>(completion[i + 1]))) {
    ++i;
    double scale = 0.1;
    while (i < completion.size() && std::isdigit(static_cast<unsigned char>(completion[i]))) {
      value += (completion[i] - '0') * scale;
      scale *= 0.1;
      ++i;
    }
  }
  if (negative) value = -value;
  if (!(value > 0.0)) return std::nullopt;
  return value;
}

BinaryCall regression_to_binary(double predicted_gain) {
  if (!(predicted_gain > 0.0)) throw DomainError("predicted gain must be positive");
  return predicted_gain > 1.00 ? BinaryCall::Improvement : BinaryCall::NoImprovement;
}

GainClass regression_to_class3(double predicted_gain) {
  return classify_gain(predicted_gain).class3;
}

namespace {

std::string format_probability(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "p_first_faster=%.12f", p);
  return buf;
}

// Deterministic tie-break that tracks the program, not the slot, so a
// presentation flip cannot change which side wins.
Choice break_probability_tie(const std::string& first, const std::string& second) {
  return fnv1a64(first) <= fnv1a64(second) ? Choice::A : Choice::B;
}

}  // namespace

JudgeVerdict judge_classify(const PairRecord& record, PresentationOrder order, Strategy strategy,
                            const JudgeInputs& inputs) {
  const std::string& first =
      order.order == SlotOrder::OriginalFirst ? record.original.text : record.refined.text;
  const std::string& second =
      order.order == SlotOrder::OriginalFirst ? record.refined.text : record.original.text;

  JudgeVerdict verdict;
  verdict.pair_id = record.pair.pair_id;
  verdict.mode = JudgeMode::Classify;
  verdict.strategy = strategy;
  verdict.order = order.order;

  if (strategy == Strategy::Learned) {
    if (inputs.model == nullptr) throw ConfigError("learned strategy needs a model");
    FeatureVector fv = extract_features(first, second, record.original.subject_language);
    // The score negates exactly under a side swap, so deciding on its sign
    // keeps verdicts consistent across presentation orders.
    double score = predict_score(*inputs.model, fv);
    if (score > 0.0)
      verdict.choice = Choice::A;
    else if (score < 0.0)
      verdict.choice = Choice::B;
    else
      verdict.choice = break_probability_tie(first, second);
    verdict.raw_output = format_probability(predict_first_faster(*inputs.model, fv));
    return verdict;
  }

  if (inputs.backend == nullptr) throw ConfigError("prompted strategy needs a backend");
  std::string prompt = build_classification_prompt(first, second, strategy, inputs.bank);
  verdict.raw_output = inputs.backend->complete(prompt);
  verdict.choice = parse_choice(verdict.raw_output);  // nullopt = abstention
  return verdict;
}

JudgeVerdict judge_regress(const PairRecord& record, Strategy strategy, const JudgeInputs& inputs) {
  JudgeVerdict verdict;
  verdict.pair_id = record.pair.pair_id;
  verdict.mode = JudgeMode::Regress;
  verdict.strategy = strategy;
  verdict.order = SlotOrder::OriginalFirst;  // regression fixes the order

  if (strategy == Strategy::Learned) {
    if (inputs.model == nullptr) throw ConfigError("learned strategy needs a model");
    double g = predict_gain(*inputs.model,
                            extract_features(record.original.text, record.refined.text,
                                             record.original.subject_language));
    verdict.predicted_gain = g;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "predicted_gain=%.12f", g);
    verdict.raw_output = buf;
    return verdict;
  }

  if (inputs.backend == nullptr) throw ConfigError("prompted strategy needs a backend");
  std::string prompt = build_regression_prompt(record.original.text, record.refined.text);
  verdict.raw_output = inputs.backend->complete(prompt);
  verdict.predicted_gain = parse_first_number(verdict.raw_output);  // nullopt = abstention
  return verdict;
}

std::string explain(const PairRecord& record, double improvement_fraction, Winner winner,
                    CompletionBackend& backend) {
  std::string prompt =
      build_explanation_prompt(record.original.text, record.refined.text, winner, improvement_fraction);
  return backend.complete(prompt);
}

}  // namespace effjudge
