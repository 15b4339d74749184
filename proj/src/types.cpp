#include "effjudge/types.hpp"

#include <cmath>

#include "effjudge/util.hpp"

namespace effjudge {

std::string to_string(SubjectLanguage lang) {
  switch (lang) {
    case SubjectLanguage::Python: return "python";
    case SubjectLanguage::Cpp: return "cpp";
    case SubjectLanguage::Ruby: return "ruby";
    case SubjectLanguage::Perl: return "perl";
    case SubjectLanguage::Rust: return "rust";
  }
  throw DomainError("unknown subject language value");
}

SubjectLanguage subject_language_from_string(const std::string& s) {
  if (s == "python") return SubjectLanguage::Python;
  if (s == "cpp") return SubjectLanguage::Cpp;
  if (s == "ruby") return SubjectLanguage::Ruby;
  if (s == "perl") return SubjectLanguage::Perl;
  if (s == "rust") return SubjectLanguage::Rust;
  throw ParseError("unknown subject_language '" + s + "'");
}

std::string to_string(const Source& s) {
  if (s.kind == Source::Kind::Human) return "human";
  return "machine:" + s.model_name;
}

Source source_from_string(const std::string& s) {
  if (s == "human") return Source::human();
  if (s.rfind("machine:", 0) == 0) {
    std::string model = s.substr(8);
    if (model.empty()) throw ParseError("machine source missing model name");
    return Source::machine(model);
  }
  throw ParseError("unknown source '" + s + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::HH: return "HH";
    case Scenario::HM: return "HM";
    case Scenario::MM: return "MM";
  }
  throw DomainError("unknown scenario value");
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "HH") return Scenario::HH;
  if (s == "HM") return Scenario::HM;
  if (s == "MM") return Scenario::MM;
  throw ParseError("unknown scenario '" + s + "'");
}

Scenario scenario_for(const Source& original, const Source& refined) {
  if (!original.is_machine() && !refined.is_machine()) return Scenario::HH;
  if (!original.is_machine() && refined.is_machine()) return Scenario::HM;
  if (original.is_machine() && refined.is_machine()) return Scenario::MM;
  throw IntegrityError("machine original refined by a human has no scenario");
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("split fraction outside [0,1]");
  }
  double sum = train_fraction + val_fraction + test_fraction;
  if (std::fabs(sum - 1.0) > 1e-9) throw DomainError("split fractions must sum to 1");
}

std::string to_string(GainClass c) {
  switch (c) {
    case GainClass::Degradation: return "degradation";
    case GainClass::NonImprovement: return "non_improvement";
    case GainClass::Improvement: return "improvement";
  }
  throw DomainError("unknown gain class value");
}

GainClass gain_class_from_string(const std::string& s) {
  if (s == "degradation") return GainClass::Degradation;
  if (s == "non_improvement") return GainClass::NonImprovement;
  if (s == "improvement") return GainClass::Improvement;
  throw ParseError("unknown class3 '" + s + "'");
}

std::string to_string(Winner w) {
  return w == Winner::OriginalFaster ? "original" : "refined";
}

Winner winner_from_string(const std::string& s) {
  if (s == "original") return Winner::OriginalFaster;
  if (s == "refined") return Winner::RefinedFaster;
  throw ParseError("unknown winner '" + s + "'");
}

std::string to_string(JudgeMode m) {
  return m == JudgeMode::Classify ? "classify" : "regress";
}

JudgeMode judge_mode_from_string(const std::string& s) {
  if (s == "classify") return JudgeMode::Classify;
  if (s == "regress") return JudgeMode::Regress;
  throw ParseError("unknown mode '" + s + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ZeroShot: return "zero_shot";
    case Strategy::FewShot: return "few_shot";
    case Strategy::ZeroShotCoT: return "zero_shot_cot";
    case Strategy::FewShotCoT: return "few_shot_cot";
    case Strategy::Learned: return "learned";
  }
  throw DomainError("unknown strategy value");
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "zero_shot") return Strategy::ZeroShot;
  if (s == "few_shot") return Strategy::FewShot;
  if (s == "zero_shot_cot") return Strategy::ZeroShotCoT;
  if (s == "few_shot_cot") return Strategy::FewShotCoT;
  if (s == "learned") return Strategy::Learned;
  throw ParseError("unknown strategy '" + s + "'");
}

std::string to_string(SlotOrder o) {
  return o == SlotOrder::OriginalFirst ? "original_first" : "refined_first";
}

SlotOrder slot_order_from_string(const std::string& s) {
  if (s == "original_first") return SlotOrder::OriginalFirst;
  if (s == "refined_first") return SlotOrder::RefinedFirst;
  throw ParseError("unknown order '" + s + "'");
}

std::string to_string(Choice c) { return c == Choice::A ? "A" : "B"; }

Choice correct_letter(SlotOrder order, Winner winner) {
  bool winner_shown_first = (order == SlotOrder::OriginalFirst) == (winner == Winner::OriginalFaster);
  return winner_shown_first ? Choice::A : Choice::B;
}

SlotOrder randomized_slot_order(std::string_view pair_id, uint64_t seed) {
  return (fnv1a64(pair_id, seed) & 1) ? SlotOrder::RefinedFirst : SlotOrder::OriginalFirst;
}

}  // namespace effjudge
