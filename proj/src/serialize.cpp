#include "effjudge/serialize.hpp"

#include <json.hpp>
#include <sstream>

#include "effjudge/util.hpp"

namespace effjudge {

using ordered_json = nlohmann::ordered_json;

namespace {

const ordered_json& require(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const ordered_json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double require_number(const ordered_json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

ordered_json sample_to_json(const CodeSample& s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["problem_id"] = s.problem_id;
  j["source"] = to_string(s.source);
  j["text"] = s.text;
  if (s.parent_id) j["parent_id"] = *s.parent_id;
  return j;
}

CodeSample sample_from_json(const ordered_json& j, SubjectLanguage lang) {
  CodeSample s;
  s.sample_id = require_string(j, "sample_id");
  s.problem_id = require_string(j, "problem_id");
  s.subject_language = lang;
  s.source = source_from_string(require_string(j, "source"));
  s.text = require_string(j, "text");
  if (j.contains("parent_id")) {
    if (!j["parent_id"].is_string()) throw ParseError("parent_id must be a string");
    s.parent_id = j["parent_id"].get<std::string>();
  }
  if (s.sample_id.empty()) throw ParseError("sample_id is empty");
  return s;
}

ordered_json suite_to_json(const TestSuite& t) {
  ordered_json j;
  j["test_suite_id"] = t.test_suite_id;
  j["time_limit_ms"] = t.time_limit_ms;
  ordered_json cases = ordered_json::array();
  for (const auto& c : t.cases) {
    ordered_json cj;
    cj["stdin"] = base64_encode(c.stdin_bytes);
    cj["expected_stdout"] = base64_encode(c.expected_stdout_bytes);
    cases.push_back(std::move(cj));
  }
  j["cases"] = std::move(cases);
  return j;
}

TestSuite suite_from_json(const ordered_json& j) {
  TestSuite t;
  t.test_suite_id = require_string(j, "test_suite_id");
  const auto& lim = require(j, "time_limit_ms");
  if (!lim.is_number_integer()) throw ParseError("time_limit_ms must be an integer");
  t.time_limit_ms = lim.get<int64_t>();
  const auto& cases = require(j, "cases");
  if (!cases.is_array()) throw ParseError("cases must be an array");
  for (const auto& cj : cases) {
    TestCase c;
    c.stdin_bytes = base64_decode(require_string(cj, "stdin"));
    c.expected_stdout_bytes = base64_decode(require_string(cj, "expected_stdout"));
    t.cases.push_back(std::move(c));
  }
  return t;
}

ordered_json label_to_json(const PairLabel& l) {
  ordered_json j;
  j["times_original_ms"] = l.times_original_ms;
  j["times_refined_ms"] = l.times_refined_ms;
  j["gain_ratio"] = l.gain_ratio;
  j["class3"] = to_string(l.class3);
  j["winner"] = to_string(l.winner);
  j["consistent"] = l.consistent;
  j["easy"] = l.easy;
  return j;
}

PairLabel label_from_json(const ordered_json& j, const std::string& pair_id) {
  PairLabel l;
  l.pair_id = pair_id;
  auto read_times = [&](const char* key, std::array<double, 3>& out) {
    const auto& a = require(j, key);
    if (!a.is_array() || a.size() != 3) throw ParseError(std::string(key) + " must be an array of 3");
    for (size_t i = 0; i < 3; ++i) out[i] = a[i].get<double>();
  };
  read_times("times_original_ms", l.times_original_ms);
  read_times("times_refined_ms", l.times_refined_ms);
  l.gain_ratio = require_number(j, "gain_ratio");
  l.class3 = gain_class_from_string(require_string(j, "class3"));
  l.winner = winner_from_string(require_string(j, "winner"));
  const auto& cons = require(j, "consistent");
  const auto& easy = require(j, "easy");
  if (!cons.is_boolean() || !easy.is_boolean()) throw ParseError("consistent/easy must be booleans");
  l.consistent = cons.get<bool>();
  l.easy = easy.get<bool>();
  return l;
}

}  // namespace

std::string record_to_json_line(const PairRecord& rec) {
  ordered_json j;
  j["pair_id"] = rec.pair.pair_id;
  j["scenario"] = to_string(rec.pair.scenario);
  j["subject_language"] = to_string(rec.original.subject_language);
  j["original"] = sample_to_json(rec.original);
  j["refined"] = sample_to_json(rec.refined);
  j["test_suite"] = suite_to_json(rec.suite);
  if (rec.oracle) {
    ordered_json oj;
    oj["winner"] = to_string(rec.oracle->winner);
    oj["nominal_gain"] = rec.oracle->nominal_gain;
    j["oracle"] = std::move(oj);
  }
  if (rec.label) j["label"] = label_to_json(*rec.label);
  return j.dump();
}

PairRecord record_from_json_line(const std::string& line) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON");
  if (!j.is_object()) throw ParseError("record is not a JSON object");

  PairRecord rec;
  rec.pair.pair_id = require_string(j, "pair_id");
  if (rec.pair.pair_id.empty()) throw ParseError("pair_id is empty");
  rec.pair.scenario = scenario_from_string(require_string(j, "scenario"));
  SubjectLanguage lang = subject_language_from_string(require_string(j, "subject_language"));
  rec.original = sample_from_json(require(j, "original"), lang);
  rec.refined = sample_from_json(require(j, "refined"), lang);
  rec.suite = suite_from_json(require(j, "test_suite"));
  rec.pair.original_id = rec.original.sample_id;
  rec.pair.refined_id = rec.refined.sample_id;
  rec.pair.test_suite_id = rec.suite.test_suite_id;
  if (j.contains("oracle")) {
    const auto& oj = j["oracle"];
    SynthOracle o;
    o.winner = winner_from_string(require_string(oj, "winner"));
    o.nominal_gain = require_number(oj, "nominal_gain");
    rec.oracle = o;
  }
  if (j.contains("label")) rec.label = label_from_json(j["label"], rec.pair.pair_id);
  return rec;
}

namespace {

ordered_json verdict_fields_to_json(const JudgeVerdict& v) {
  ordered_json j;
  j["mode"] = to_string(v.mode);
  j["strategy"] = to_string(v.strategy);
  j["order"] = to_string(v.order);
  if (v.choice) j["choice"] = to_string(*v.choice);
  if (v.predicted_gain) j["predicted_gain"] = *v.predicted_gain;
  j["raw_output"] = v.raw_output;
  return j;
}

JudgeVerdict verdict_fields_from_json(const ordered_json& j, std::string pair_id) {
  JudgeVerdict v;
  v.pair_id = std::move(pair_id);
  v.mode = judge_mode_from_string(require_string(j, "mode"));
  v.strategy = strategy_from_string(require_string(j, "strategy"));
  v.order = slot_order_from_string(require_string(j, "order"));
  if (j.contains("choice")) {
    std::string c = j["choice"].get<std::string>();
    if (c == "A") v.choice = Choice::A;
    else if (c == "B") v.choice = Choice::B;
    else throw ParseError("unknown choice '" + c + "'");
  }
  if (j.contains("predicted_gain")) v.predicted_gain = j["predicted_gain"].get<double>();
  v.raw_output = require_string(j, "raw_output");
  if (v.mode == JudgeMode::Classify && v.predicted_gain)
    throw ParseError("classify verdict carries predicted_gain");
  if (v.mode == JudgeMode::Regress && v.choice)
    throw ParseError("regress verdict carries choice");
  return v;
}

}  // namespace

std::string verdict_to_json_line(const JudgeVerdict& v) {
  ordered_json j;
  j["pair_id"] = v.pair_id;
  ordered_json fields = verdict_fields_to_json(v);
  j.update(fields);
  return j.dump();
}

JudgeVerdict verdict_from_json_line(const std::string& line) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON");
  std::string pair_id = require_string(j, "pair_id");
  if (j.contains("verdict")) return verdict_fields_from_json(j["verdict"], pair_id);
  return verdict_fields_from_json(j, pair_id);
}

std::string record_with_verdict_to_json_line(const PairRecord& rec, const JudgeVerdict& v) {
  if (rec.pair.pair_id != v.pair_id) throw DomainError("verdict belongs to a different pair");
  ordered_json j = ordered_json::parse(record_to_json_line(rec));
  j["verdict"] = verdict_fields_to_json(v);
  return j.dump();
}

std::vector<std::string> read_jsonl_lines(const std::string& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(content.substr(pos));
      break;
    }
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::vector<JudgeVerdict> load_verdicts(const std::string& path) {
  std::vector<JudgeVerdict> out;
  auto lines = read_jsonl_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(verdict_from_json_line(lines[i]));
    } catch (const Error& e) {
      throw ParseError(path + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_verdicts(const std::vector<JudgeVerdict>& verdicts, const std::string& path) {
  std::string out;
  for (const auto& v : verdicts) {
    out += verdict_to_json_line(v);
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_records_with_verdicts(const std::vector<PairRecord>& records,
                                 const std::vector<JudgeVerdict>& verdicts,
                                 const std::string& path) {
  if (records.size() != verdicts.size())
    throw DomainError("record and verdict counts differ");
  std::string out;
  for (size_t i = 0; i < records.size(); ++i) {
    out += record_with_verdict_to_json_line(records[i], verdicts[i]);
    out += '\n';
  }
  atomic_write_file(path, out);
}

}  // namespace effjudge
