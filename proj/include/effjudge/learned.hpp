#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

inline constexpr const char* kFeatureSchema = "pairdiff-v1";

// Names of the per-side lexical features, in vector order.
const std::vector<std::string>& per_side_feature_names();
size_t per_side_feature_count();

struct FeatureVector {
  std::string schema = kFeatureSchema;
  std::vector<double> values;  // [f(first), f(second), f(first) - f(second)]
};

std::vector<double> side_features(const std::string& text, SubjectLanguage lang);

FeatureVector extract_features(const std::string& first_text, const std::string& second_text,
                               SubjectLanguage lang);

struct TrainHyperparams {
  size_t epochs = 10;
  double learning_rate = 0.1;
  uint64_t seed = 0;
};

// Linear judge over pair features. The first-side weight block is tied to
// the negated second-side block and the classifier bias is pinned at zero,
// which makes P(first faster | a, b) + P(first faster | b, a) = 1 hold by
// construction, not by training luck.
struct JudgeModel {
  JudgeMode mode = JudgeMode::Classify;
  std::string schema = kFeatureSchema;
  std::vector<double> weights;  // length 3 * per_side_feature_count()
  double bias = 0.0;            // always 0 for Classify
  TrainHyperparams metadata;
};

// Cross-entropy classifier over {first-shown faster, second-shown faster};
// each pair enters under a presentation order drawn from its id and the
// seed, so position carries no signal. Throws DomainError on fewer than
// two examples or a single-class set.
JudgeModel train_classifier(const std::vector<PairRecord>& labeled,
                            const TrainHyperparams& hp = {});

// Least squares on log(gain_ratio), solved exactly (tiny ridge for the
// collinear difference block); predictions come back as exp(output).
JudgeModel train_regressor(const std::vector<PairRecord>& labeled,
                           const TrainHyperparams& hp = {});

// Raw linear score, evaluated through the tied-weight difference form so
// that swapping the two sides negates it bit-exactly; log-odds for the
// classifier, log-gain for the regressor. Schema mismatch raises
// DomainError.
double predict_score(const JudgeModel& model, const FeatureVector& features);
// P(first-shown faster) in (0, 1).
double predict_first_faster(const JudgeModel& model, const FeatureVector& features);
// Predicted gain ratio (> 0), original shown first by convention.
double predict_gain(const JudgeModel& model, const FeatureVector& features);

void save_model(const JudgeModel& model, const std::string& path);
JudgeModel load_model(const std::string& path);
std::string model_to_json(const JudgeModel& model);

// ---------------------------------------------------------------------------
// Training objectives, exposed so analytic gradients can be verified
// against finite differences. Free parameters are the untied blocks:
// classifier [u(d), v(d)], regressor [u(d), v(d), bias].

struct TrainingSet {
  size_t side_dim = 0;
  std::vector<FeatureVector> features;
  std::vector<double> targets;  // classify: 1 if first shown faster; regress: log gain
};

class PairwiseLogisticObjective {
 public:
  explicit PairwiseLogisticObjective(const TrainingSet& data);
  size_t param_count() const { return 2 * data_->side_dim; }
  double loss(const std::vector<double>& params) const;
  std::vector<double> gradient(const std::vector<double>& params) const;

 private:
  const TrainingSet* data_;
};

class LogGainLeastSquares {
 public:
  explicit LogGainLeastSquares(const TrainingSet& data, double ridge = 1e-9);
  size_t param_count() const { return 2 * data_->side_dim + 1; }
  double loss(const std::vector<double>& params) const;
  std::vector<double> gradient(const std::vector<double>& params) const;
  double ridge() const { return ridge_; }

 private:
  const TrainingSet* data_;
  double ridge_;
};

// The classify / regress training sets exactly as the trainers build them.
TrainingSet build_classify_training_set(const std::vector<PairRecord>& labeled, uint64_t seed);
TrainingSet build_regress_training_set(const std::vector<PairRecord>& labeled);

}  // namespace effjudge
