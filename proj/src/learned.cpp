#include "effjudge/learned.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "effjudge/util.hpp"

namespace effjudge {

// ---------------------------------------------------------------------------
// Lexical features

const std::vector<std::string>& per_side_feature_names() {
  static const std::vector<std::string> names = {
      "char_count",       "line_count",     "loop_count",
      "nesting_depth",    "conditional_count", "call_count",
      "arith_op_count",   "memo_idiom",     "io_call_count",
  };
  return names;
}

size_t per_side_feature_count() { return per_side_feature_names().size(); }

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

const char* const kLoopWords[] = {"for", "while", "loop", "until", "foreach"};
const char* const kCondWords[] = {"if", "elif", "else", "elsif", "unless", "case", "switch"};
const char* const kIoWords[] = {"print",  "input", "write", "read",   "flush", "puts",
                                "gets",   "cin",   "cout",  "printf", "scanf", "println"};
const char* const kMemoMarks[] = {"lru_cache", "cache", "memo"};

template <size_t N>
bool word_in(const std::string& w, const char* const (&set)[N]) {
  for (const char* s : set)
    if (w == s) return true;
  return false;
}

}  // namespace

std::vector<double> side_features(const std::string& text, SubjectLanguage /*lang*/) {
  double chars = static_cast<double>(text.size());

  double lines = 0;
  double loops = 0, conds = 0, calls = 0, arith = 0, io = 0;
  double memo = 0;
  double max_indent = 0, max_brace = 0;

  // line count and indentation proxy
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    if (!trim(line).empty()) {
      lines += 1;
      double indent = 0;
      for (char c : line) {
        if (c == ' ')
          indent += 0.25;  // four spaces per level
        else if (c == '\t')
          indent += 1.0;
        else
          break;
      }
      max_indent = std::max(max_indent, indent);
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }

  // token and character scans
  int brace_depth = 0;
  std::string word;
  for (size_t i = 0; i <= text.size(); ++i) {
    char c = i < text.size() ? text[i] : '\0';
    if (is_ident_char(c)) {
      word.push_back(c);
    } else {
      if (!word.empty()) {
        if (word_in(word, kLoopWords)) loops += 1;
        if (word_in(word, kCondWords)) conds += 1;
        if (word_in(word, kIoWords)) io += 1;
        if (c == '(') calls += 1;
        word.clear();
      }
      if (c == '{') max_brace = std::max(max_brace, static_cast<double>(++brace_depth));
      if (c == '}') --brace_depth;
      if (c == '+' || c == '-' || c == '*' || c == '/' || c == '%') arith += 1;
    }
  }

  for (const char* mark : kMemoMarks) {
    if (text.find(mark) != std::string::npos) {
      memo = 1;
      break;
    }
  }

  return {chars, lines, loops, std::max(max_indent, max_brace), conds, calls, arith, memo, io};
}

FeatureVector extract_features(const std::string& first_text, const std::string& second_text,
                               SubjectLanguage lang) {
  if (first_text.empty() || second_text.empty()) throw DomainError("feature extraction needs non-empty texts");
  std::vector<double> a = side_features(first_text, lang);
  std::vector<double> b = side_features(second_text, lang);
  FeatureVector fv;
  fv.values.reserve(3 * a.size());
  fv.values.insert(fv.values.end(), a.begin(), a.end());
  fv.values.insert(fv.values.end(), b.begin(), b.end());
  for (size_t i = 0; i < a.size(); ++i) fv.values.push_back(a[i] - b[i]);
  return fv;
}

// ---------------------------------------------------------------------------
// Objectives

namespace {

// score under tied weights: u . (x1 - x2) + v . x3 (+ bias for regression)
double tied_score(const std::vector<double>& params, const FeatureVector& fv, size_t d, double bias) {
  double s = bias;
  for (size_t j = 0; j < d; ++j) {
    s += params[j] * (fv.values[j] - fv.values[d + j]);
    s += params[d + j] * fv.values[2 * d + j];
  }
  return s;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// -(y log p + (1-y) log(1-p)) without overflow
double xent(double score, double y) {
  double m = std::max(score, 0.0);
  return m - score * y + std::log(std::exp(-m) + std::exp(score - m));
}

}  // namespace

PairwiseLogisticObjective::PairwiseLogisticObjective(const TrainingSet& data) : data_(&data) {}

double PairwiseLogisticObjective::loss(const std::vector<double>& params) const {
  if (params.size() != param_count()) throw DomainError("parameter vector has wrong length");
  double total = 0.0;
  for (size_t i = 0; i < data_->features.size(); ++i)
    total += xent(tied_score(params, data_->features[i], data_->side_dim, 0.0), data_->targets[i]);
  return total / static_cast<double>(data_->features.size());
}

std::vector<double> PairwiseLogisticObjective::gradient(const std::vector<double>& params) const {
  if (params.size() != param_count()) throw DomainError("parameter vector has wrong length");
  size_t d = data_->side_dim;
  std::vector<double> g(param_count(), 0.0);
  for (size_t i = 0; i < data_->features.size(); ++i) {
    const auto& fv = data_->features[i];
    double err = sigmoid(tied_score(params, fv, d, 0.0)) - data_->targets[i];
    for (size_t j = 0; j < d; ++j) {
      g[j] += err * (fv.values[j] - fv.values[d + j]);
      g[d + j] += err * fv.values[2 * d + j];
    }
  }
  double inv = 1.0 / static_cast<double>(data_->features.size());
  for (double& x : g) x *= inv;
  return g;
}

LogGainLeastSquares::LogGainLeastSquares(const TrainingSet& data, double ridge)
    : data_(&data), ridge_(ridge) {}

double LogGainLeastSquares::loss(const std::vector<double>& params) const {
  if (params.size() != param_count()) throw DomainError("parameter vector has wrong length");
  size_t d = data_->side_dim;
  double total = 0.0;
  for (size_t i = 0; i < data_->features.size(); ++i) {
    double r = tied_score(params, data_->features[i], d, params[2 * d]) - data_->targets[i];
    total += r * r;
  }
  total /= static_cast<double>(data_->features.size());
  for (double p : params) total += ridge_ * p * p;
  return total;
}

std::vector<double> LogGainLeastSquares::gradient(const std::vector<double>& params) const {
  if (params.size() != param_count()) throw DomainError("parameter vector has wrong length");
  size_t d = data_->side_dim;
  std::vector<double> g(param_count(), 0.0);
  for (size_t i = 0; i < data_->features.size(); ++i) {
    const auto& fv = data_->features[i];
    double r = tied_score(params, fv, d, params[2 * d]) - data_->targets[i];
    for (size_t j = 0; j < d; ++j) {
      g[j] += 2.0 * r * (fv.values[j] - fv.values[d + j]);
      g[d + j] += 2.0 * r * fv.values[2 * d + j];
    }
    g[2 * d] += 2.0 * r;
  }
  double inv = 1.0 / static_cast<double>(data_->features.size());
  for (double& x : g) x *= inv;
  for (size_t k = 0; k < params.size(); ++k) g[k] += 2.0 * ridge_ * params[k];
  return g;
}

// ---------------------------------------------------------------------------
// Training-set construction

TrainingSet build_classify_training_set(const std::vector<PairRecord>& labeled, uint64_t seed) {
  TrainingSet set;
  set.side_dim = per_side_feature_count();
  for (const auto& rec : labeled) {
    if (!rec.label) continue;
    SlotOrder order = randomized_slot_order(rec.pair.pair_id, seed);
    const std::string& first =
        order == SlotOrder::OriginalFirst ? rec.original.text : rec.refined.text;
    const std::string& second =
        order == SlotOrder::OriginalFirst ? rec.refined.text : rec.original.text;
    set.features.push_back(extract_features(first, second, rec.original.subject_language));
    set.targets.push_back(correct_letter(order, rec.label->winner) == Choice::A ? 1.0 : 0.0);
  }
  return set;
}

TrainingSet build_regress_training_set(const std::vector<PairRecord>& labeled) {
  TrainingSet set;
  set.side_dim = per_side_feature_count();
  for (const auto& rec : labeled) {
    if (!rec.label) continue;
    set.features.push_back(
        extract_features(rec.original.text, rec.refined.text, rec.original.subject_language));
    set.targets.push_back(std::log(rec.label->gain_ratio));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Trainers

namespace {

// Shared per-feature scales (no centering, no per-block asymmetry), so the
// tied-weight layout survives folding the scales back into raw space.
struct Scales {
  std::vector<double> side;
  std::vector<double> diff;
};

Scales compute_scales(const TrainingSet& set) {
  size_t d = set.side_dim;
  Scales sc{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& fv : set.features) {
    for (size_t j = 0; j < d; ++j) {
      sc.side[j] += fv.values[j] * fv.values[j] + fv.values[d + j] * fv.values[d + j];
      sc.diff[j] += fv.values[2 * d + j] * fv.values[2 * d + j];
    }
  }
  double n = static_cast<double>(set.features.size());
  for (size_t j = 0; j < d; ++j) {
    sc.side[j] = std::sqrt(sc.side[j] / (2.0 * n));
    sc.diff[j] = std::sqrt(sc.diff[j] / n);
    if (sc.side[j] < 1e-12) sc.side[j] = 1.0;
    if (sc.diff[j] < 1e-12) sc.diff[j] = 1.0;
  }
  return sc;
}

TrainingSet apply_scales(const TrainingSet& set, const Scales& sc) {
  TrainingSet out;
  out.side_dim = set.side_dim;
  out.targets = set.targets;
  out.features.reserve(set.features.size());
  size_t d = set.side_dim;
  for (const auto& fv : set.features) {
    FeatureVector scaled = fv;
    for (size_t j = 0; j < d; ++j) {
      scaled.values[j] /= sc.side[j];
      scaled.values[d + j] /= sc.side[j];
      scaled.values[2 * d + j] /= sc.diff[j];
    }
    out.features.push_back(std::move(scaled));
  }
  return out;
}

// Materialize raw-space weights [w1, -w1, w3] from free params in scaled space.
std::vector<double> fold_weights(const std::vector<double>& params, const Scales& sc) {
  size_t d = sc.side.size();
  std::vector<double> w(3 * d, 0.0);
  for (size_t j = 0; j < d; ++j) {
    w[j] = params[j] / sc.side[j];
    w[d + j] = -params[j] / sc.side[j];
    w[2 * d + j] = params[d + j] / sc.diff[j];
  }
  return w;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Full-batch descent with Armijo backtracking; the loss never increases.
template <typename Objective>
std::vector<double> gradient_descent(const Objective& obj, size_t epochs, double lr) {
  std::vector<double> params(obj.param_count(), 0.0);
  double current = obj.loss(params);
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<double> g = obj.gradient(params);
    double gnorm2 = dot(g, g);
    if (gnorm2 == 0.0) break;
    double step = lr;
    for (int halving = 0; halving < 40; ++halving) {
      std::vector<double> trial(params.size());
      for (size_t k = 0; k < params.size(); ++k) trial[k] = params[k] - step * g[k];
      double trial_loss = obj.loss(trial);
      if (trial_loss <= current - 1e-4 * step * gnorm2) {
        params = std::move(trial);
        current = trial_loss;
        break;
      }
      step *= 0.5;
    }
  }
  return params;
}

// Cholesky solve of (A + ridge I) x = b for symmetric positive definite A.
std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
  size_t n = b.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = a[i][j];
      for (size_t k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
      if (i == j) {
        if (sum <= 0.0) throw DomainError("normal matrix is not positive definite");
        a[i][i] = std::sqrt(sum);
      } else {
        a[i][j] = sum / a[j][j];
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {  // forward
    double sum = b[i];
    for (size_t k = 0; k < i; ++k) sum -= a[i][k] * b[k];
    b[i] = sum / a[i][i];
  }
  for (size_t i = n; i-- > 0;) {  // backward
    double sum = b[i];
    for (size_t k = i + 1; k < n; ++k) sum -= a[k][i] * b[k];
    b[i] = sum / a[i][i];
  }
  return b;
}

}  // namespace

JudgeModel train_classifier(const std::vector<PairRecord>& labeled, const TrainHyperparams& hp) {
  TrainingSet raw = build_classify_training_set(labeled, hp.seed);
  if (raw.features.size() < 2) throw DomainError("need at least two labeled examples");
  bool has_a = false, has_b = false;
  for (double t : raw.targets) (t > 0.5 ? has_a : has_b) = true;
  if (!has_a || !has_b) throw DomainError("training set contains a single class");

  Scales sc = compute_scales(raw);
  TrainingSet scaled = apply_scales(raw, sc);
  PairwiseLogisticObjective obj(scaled);
  std::vector<double> params = gradient_descent(obj, hp.epochs, hp.learning_rate);

  JudgeModel model;
  model.mode = JudgeMode::Classify;
  model.weights = fold_weights(params, sc);
  model.bias = 0.0;
  model.metadata = hp;
  return model;
}

JudgeModel train_regressor(const std::vector<PairRecord>& labeled, const TrainHyperparams& hp) {
  TrainingSet raw = build_regress_training_set(labeled);
  if (raw.features.size() < 2) throw DomainError("need at least two labeled examples");

  Scales sc = compute_scales(raw);
  TrainingSet scaled = apply_scales(raw, sc);
  size_t d = scaled.side_dim;
  size_t m = 2 * d + 1;
  double n = static_cast<double>(scaled.features.size());
  const double ridge = 1e-9;

  // z = [x1 - x2, x3, 1]; solve (Z'Z/n + ridge I) params = Z't/n exactly.
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  std::vector<double> b(m, 0.0);
  std::vector<double> z(m, 0.0);
  for (size_t i = 0; i < scaled.features.size(); ++i) {
    const auto& fv = scaled.features[i];
    for (size_t j = 0; j < d; ++j) {
      z[j] = fv.values[j] - fv.values[d + j];
      z[d + j] = fv.values[2 * d + j];
    }
    z[2 * d] = 1.0;
    for (size_t r = 0; r < m; ++r) {
      b[r] += z[r] * scaled.targets[i];
      for (size_t c = 0; c <= r; ++c) a[r][c] += z[r] * z[c];
    }
  }
  for (size_t r = 0; r < m; ++r) {
    b[r] /= n;
    for (size_t c = 0; c <= r; ++c) {
      a[r][c] /= n;
      a[c][r] = a[r][c];
    }
    a[r][r] += ridge;
  }
  std::vector<double> params = solve_spd(std::move(a), std::move(b));

  JudgeModel model;
  model.mode = JudgeMode::Regress;
  model.bias = params[2 * d];
  params.resize(2 * d);
  model.weights = fold_weights(params, sc);
  model.metadata = hp;
  return model;
}

// ---------------------------------------------------------------------------
// Prediction and persistence

double predict_score(const JudgeModel& model, const FeatureVector& fv) {
  if (fv.schema != model.schema) throw DomainError("feature schema does not match the model");
  if (fv.values.size() != model.weights.size())
    throw DomainError("feature vector length does not match the model");
  // The w2 block is the negated w1 block, so the dot product collapses to
  // the form below. A plain left-to-right dot product would not negate
  // exactly under a side swap; this form does, term by term.
  size_t d = model.weights.size() / 3;
  double s = model.bias;
  for (size_t j = 0; j < d; ++j) {
    s += model.weights[j] * (fv.values[j] - fv.values[d + j]);
    s += model.weights[2 * d + j] * fv.values[2 * d + j];
  }
  return s;
}

double predict_first_faster(const JudgeModel& model, const FeatureVector& features) {
  if (model.mode != JudgeMode::Classify) throw DomainError("model is not a classifier");
  return sigmoid(predict_score(model, features));
}

double predict_gain(const JudgeModel& model, const FeatureVector& features) {
  if (model.mode != JudgeMode::Regress) throw DomainError("model is not a regressor");
  return std::exp(predict_score(model, features));
}

std::string model_to_json(const JudgeModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "effjudge-model-v1";
  j["mode"] = to_string(model.mode);
  j["schema"] = model.schema;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["metadata"] = {{"seed", model.metadata.seed},
                   {"epochs", model.metadata.epochs},
                   {"learning_rate", model.metadata.learning_rate}};
  return j.dump();
}

void save_model(const JudgeModel& model, const std::string& path) {
  atomic_write_file(path, model_to_json(model) + "\n");
}

JudgeModel load_model(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid model JSON in " + path);
  if (!j.contains("format") || j["format"] != "effjudge-model-v1")
    throw ParseError("unrecognized model format in " + path);
  JudgeModel model;
  model.mode = judge_mode_from_string(j.at("mode").get<std::string>());
  model.schema = j.at("schema").get<std::string>();
  if (model.schema != kFeatureSchema)
    throw ParseError("model schema '" + model.schema + "' not supported");
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  size_t d = per_side_feature_count();
  if (model.weights.size() != 3 * d)
    throw ParseError("model weight length does not match schema");
  for (size_t k = 0; k < d; ++k)
    if (model.weights[d + k] != -model.weights[k])
      throw ParseError("model weight blocks are not tied");
  if (judge_mode_from_string(j.at("mode").get<std::string>()) == JudgeMode::Classify &&
      model.bias != 0.0)
    throw ParseError("classifier bias must be zero");
  const auto& md = j.at("metadata");
  model.metadata.seed = md.at("seed").get<uint64_t>();
  model.metadata.epochs = md.at("epochs").get<size_t>();
  model.metadata.learning_rate = md.at("learning_rate").get<double>();
  return model;
}

}  // namespace effjudge
