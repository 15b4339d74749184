#include "effjudge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>

#include "effjudge/executor.hpp"
#include "effjudge/util.hpp"

namespace effjudge {

using ordered_json = nlohmann::ordered_json;

std::vector<JoinedPair> join_verdicts(const std::vector<PairRecord>& labeled,
                                      const std::vector<JudgeVerdict>& verdicts) {
  std::map<std::string, const PairRecord*> by_id;
  for (const auto& rec : labeled) {
    if (!rec.label) throw JoinError("record '" + rec.pair.pair_id + "' has no label");
    by_id[rec.pair.pair_id] = &rec;
  }
  std::set<std::string> seen;
  std::vector<JoinedPair> joined;
  joined.reserve(verdicts.size());
  for (const auto& v : verdicts) {
    auto it = by_id.find(v.pair_id);
    if (it == by_id.end()) throw JoinError("verdict for unknown pair '" + v.pair_id + "'");
    if (!seen.insert(v.pair_id).second) throw JoinError("duplicate verdict for pair '" + v.pair_id + "'");
    joined.push_back({it->second, &v});
  }
  return joined;
}

bool verdict_correct(const JoinedPair& jp) {
  const PairLabel& label = *jp.record->label;
  const JudgeVerdict& v = *jp.verdict;
  if (v.mode == JudgeMode::Classify) {
    if (!v.choice) return false;  // abstention
    return *v.choice == correct_letter(v.order, label.winner);
  }
  if (!v.predicted_gain) return false;
  bool predicted_improvement = *v.predicted_gain > 1.0;
  bool actual_improvement = label.winner == Winner::RefinedFaster;
  return predicted_improvement == actual_improvement;
}

SliceResult accuracy(const std::vector<JoinedPair>& joined, const JoinFilter& filter) {
  SliceResult r;
  size_t correct = 0;
  for (const auto& jp : joined) {
    if (!filter(jp)) continue;
    ++r.n;
    if (verdict_correct(jp)) ++correct;
  }
  if (r.n > 0) r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  return r;
}

JoinFilter filter_all() {
  return [](const JoinedPair&) { return true; };
}
JoinFilter filter_easy() {
  return [](const JoinedPair& jp) { return jp.record->label->easy; };
}
JoinFilter filter_language(SubjectLanguage lang) {
  return [lang](const JoinedPair& jp) { return jp.record->original.subject_language == lang; };
}
JoinFilter filter_scenario(Scenario scenario) {
  return [scenario](const JoinedPair& jp) { return jp.record->pair.scenario == scenario; };
}
JoinFilter filter_refiner(const std::string& model_name) {
  return [model_name](const JoinedPair& jp) {
    const Source& s = jp.record->refined.source;
    return s.is_machine() && s.model_name == model_name;
  };
}
JoinFilter filter_source_kind(Source::Kind refined_kind) {
  return [refined_kind](const JoinedPair& jp) { return jp.record->refined.source.kind == refined_kind; };
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> midranks(const std::vector<double>& values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("spearman inputs differ in length");
  if (a.size() < 2) throw DomainError("spearman needs at least two points");
  return pearson(midranks(a), midranks(b));
}

std::vector<BucketRow> bucketize(const std::vector<JoinedPair>& joined,
                                 const std::vector<double>& edges) {
  for (size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1])) throw DomainError("bucket edges must be strictly increasing");

  std::vector<BucketRow> rows;
  double lo = 0.0;
  for (double e : edges) {
    rows.push_back({lo, e, 0, std::nullopt});
    lo = e;
  }
  rows.push_back({lo, std::numeric_limits<double>::infinity(), 0, std::nullopt});

  std::vector<size_t> correct(rows.size(), 0);
  for (const auto& jp : joined) {
    double dist = std::fabs(jp.record->label->gain_ratio - 1.0);
    size_t b = 0;
    while (b + 1 < rows.size() && dist > rows[b].hi) ++b;
    ++rows[b].n;
    if (verdict_correct(jp)) ++correct[b];
  }
  for (size_t b = 0; b < rows.size(); ++b)
    if (rows[b].n > 0)
      rows[b].accuracy = static_cast<double>(correct[b]) / static_cast<double>(rows[b].n);
  return rows;
}

FlipStats flip_test(const JudgeRunner& runner, const std::vector<PairRecord>& labeled,
                    const std::vector<uint64_t>& seeds) {
  if (seeds.size() < 2) throw DomainError("flip test needs at least two runs");
  std::vector<double> accs;
  for (uint64_t seed : seeds) {
    std::vector<JudgeVerdict> verdicts = runner(labeled, seed);
    auto joined = join_verdicts(labeled, verdicts);
    SliceResult r = accuracy(joined, filter_all());
    if (!r.accuracy) throw DomainError("flip test judged an empty set");
    accs.push_back(*r.accuracy);
  }
  FlipStats stats;
  stats.n_runs = accs.size();
  stats.mean_accuracy = std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
  for (double a : accs) stats.variance += (a - stats.mean_accuracy) * (a - stats.mean_accuracy);
  stats.variance /= static_cast<double>(accs.size());
  return stats;
}

std::vector<ScenarioRow> scenario_stats(const std::vector<PairRecord>& labeled) {
  std::map<Scenario, ScenarioRow> rows;
  std::map<Scenario, size_t> degrade, improve;
  for (const auto& rec : labeled) {
    if (!rec.label) continue;
    auto& row = rows[rec.pair.scenario];
    row.scenario = rec.pair.scenario;
    ++row.n;
    row.avg_gain += rec.label->gain_ratio;
    if (rec.label->class3 == GainClass::Degradation) ++degrade[rec.pair.scenario];
    if (rec.label->class3 == GainClass::Improvement) ++improve[rec.pair.scenario];
  }
  std::vector<ScenarioRow> out;
  for (auto& [scenario, row] : rows) {
    double n = static_cast<double>(row.n);
    row.avg_gain /= n;
    row.degrade_pct = 100.0 * static_cast<double>(degrade[scenario]) / n;
    row.improve_pct = 100.0 * static_cast<double>(improve[scenario]) / n;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------

EvalReport compute_report(const std::vector<PairRecord>& labeled,
                          const std::vector<JudgeVerdict>& verdicts, const EvalOptions& options) {
  auto joined = join_verdicts(labeled, verdicts);

  EvalReport report;
  report.n_pairs = joined.size();
  if (!verdicts.empty()) {
    report.mode = verdicts.front().mode;
    for (const auto& v : verdicts)
      if (v.mode != report.mode) throw DomainError("verdict file mixes classify and regress modes");
  }

  SliceResult overall = accuracy(joined, filter_all());
  report.accuracy_overall = overall.accuracy;
  SliceResult easy = accuracy(joined, filter_easy());
  report.n_easy = easy.n;
  report.accuracy_easy = easy.accuracy;

  size_t abstained = 0;
  for (const auto& jp : joined) {
    bool has_answer =
        jp.verdict->mode == JudgeMode::Classify ? jp.verdict->choice.has_value()
                                                : jp.verdict->predicted_gain.has_value();
    if (!has_answer) ++abstained;
  }
  report.abstention_rate =
      joined.empty() ? 0.0 : static_cast<double>(abstained) / static_cast<double>(joined.size());

  std::set<std::string> languages, refiners;
  std::set<Scenario> scenarios_seen;
  bool any_human = false, any_machine = false;
  for (const auto& jp : joined) {
    languages.insert(to_string(jp.record->original.subject_language));
    scenarios_seen.insert(jp.record->pair.scenario);
    const Source& s = jp.record->refined.source;
    if (s.is_machine()) {
      refiners.insert(s.model_name);
      any_machine = true;
    } else {
      any_human = true;
    }
  }
  for (const auto& lang : languages) {
    SliceResult r = accuracy(joined, filter_language(subject_language_from_string(lang)));
    report.by_language.push_back({lang, r.n, r.accuracy});
  }
  for (Scenario sc : scenarios_seen) {
    SliceResult r = accuracy(joined, filter_scenario(sc));
    report.by_scenario.push_back({to_string(sc), r.n, r.accuracy});
  }
  for (const auto& model : refiners) {
    SliceResult r = accuracy(joined, filter_refiner(model));
    report.by_refiner.push_back({model, r.n, r.accuracy});
  }
  if (any_human) {
    SliceResult r = accuracy(joined, filter_source_kind(Source::Kind::Human));
    report.by_source.push_back({"human", r.n, r.accuracy});
  }
  if (any_machine) {
    SliceResult r = accuracy(joined, filter_source_kind(Source::Kind::Machine));
    report.by_source.push_back({"machine", r.n, r.accuracy});
  }

  report.buckets = bucketize(joined, options.bucket_edges);

  {
    std::set<const PairRecord*> distinct;
    std::vector<PairRecord> subset;
    for (const auto& jp : joined)
      if (distinct.insert(jp.record).second) subset.push_back(*jp.record);
    report.scenarios = scenario_stats(subset);
  }

  if (report.mode == JudgeMode::Regress) {
    std::vector<double> predicted, actual;
    size_t class3_correct = 0;
    for (const auto& jp : joined) {
      if (jp.verdict->predicted_gain) {
        predicted.push_back(*jp.verdict->predicted_gain);
        actual.push_back(jp.record->label->gain_ratio);
        if (classify_gain(*jp.verdict->predicted_gain).class3 == jp.record->label->class3)
          ++class3_correct;
      }
    }
    if (predicted.size() >= 2) report.spearman_rho = spearman(predicted, actual);
    if (!joined.empty())
      report.class3_accuracy =
          static_cast<double>(class3_correct) / static_cast<double>(joined.size());
    if (!predicted.empty()) {
      std::vector<double> actual_ranks = midranks(actual);
      std::vector<double> predicted_ranks = midranks(predicted);
      for (size_t i = 0; i < predicted.size(); ++i)
        report.rank_scatter.emplace_back(actual_ranks[i], predicted_ranks[i]);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

ordered_json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ordered_json slices_to_json(const std::vector<SliceAcc>& slices) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : slices)
    arr.push_back({{"key", s.key}, {"n", s.n}, {"accuracy", opt_to_json(s.accuracy)}});
  return arr;
}

std::vector<SliceAcc> slices_from_json(const ordered_json& arr) {
  std::vector<SliceAcc> out;
  for (const auto& j : arr)
    out.push_back({j.at("key").get<std::string>(), j.at("n").get<size_t>(),
                   opt_from_json(j.at("accuracy"))});
  return out;
}

std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

std::string format_pct_value(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", pct);
  return buf;
}

std::string format_rho(double rho) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", rho);
  return buf;
}

std::string format_edge(double e) {
  if (std::isinf(e)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", e);
  return buf;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  j["mode"] = to_string(report.mode);
  j["n_pairs"] = report.n_pairs;
  j["accuracy_overall"] = opt_to_json(report.accuracy_overall);
  j["n_easy"] = report.n_easy;
  j["accuracy_easy"] = opt_to_json(report.accuracy_easy);
  j["accuracy_by_subject_language"] = slices_to_json(report.by_language);
  j["accuracy_by_scenario"] = slices_to_json(report.by_scenario);
  j["accuracy_by_refiner_model"] = slices_to_json(report.by_refiner);
  j["accuracy_by_refined_source"] = slices_to_json(report.by_source);
  j["spearman_rho"] = opt_to_json(report.spearman_rho);
  j["class3_accuracy"] = opt_to_json(report.class3_accuracy);
  j["abstention_rate"] = report.abstention_rate;
  ordered_json buckets = ordered_json::array();
  for (const auto& b : report.buckets) {
    ordered_json bj;
    bj["lo"] = b.lo;
    bj["hi"] = std::isinf(b.hi) ? ordered_json(nullptr) : ordered_json(b.hi);
    bj["n"] = b.n;
    bj["accuracy"] = opt_to_json(b.accuracy);
    buckets.push_back(std::move(bj));
  }
  j["bucket_accuracies"] = std::move(buckets);
  if (report.flip) {
    j["flip_test"] = {{"mean_accuracy", report.flip->mean_accuracy},
                      {"variance", report.flip->variance},
                      {"n_runs", report.flip->n_runs}};
  } else {
    j["flip_test"] = nullptr;
  }
  ordered_json scen = ordered_json::array();
  for (const auto& s : report.scenarios) {
    scen.push_back({{"scenario", to_string(s.scenario)},
                    {"n", s.n},
                    {"avg_gain", s.avg_gain},
                    {"degrade_pct", s.degrade_pct},
                    {"improve_pct", s.improve_pct}});
  }
  j["scenario_stats"] = std::move(scen);
  ordered_json scatter = ordered_json::array();
  for (const auto& [a, p] : report.rank_scatter) scatter.push_back({a, p});
  j["rank_scatter"] = std::move(scatter);
  return j.dump(2);
}

EvalReport report_from_json(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid report JSON");
  EvalReport r;
  r.mode = judge_mode_from_string(j.at("mode").get<std::string>());
  r.n_pairs = j.at("n_pairs").get<size_t>();
  r.accuracy_overall = opt_from_json(j.at("accuracy_overall"));
  r.n_easy = j.at("n_easy").get<size_t>();
  r.accuracy_easy = opt_from_json(j.at("accuracy_easy"));
  r.by_language = slices_from_json(j.at("accuracy_by_subject_language"));
  r.by_scenario = slices_from_json(j.at("accuracy_by_scenario"));
  r.by_refiner = slices_from_json(j.at("accuracy_by_refiner_model"));
  r.by_source = slices_from_json(j.at("accuracy_by_refined_source"));
  r.spearman_rho = opt_from_json(j.at("spearman_rho"));
  r.class3_accuracy = opt_from_json(j.at("class3_accuracy"));
  r.abstention_rate = j.at("abstention_rate").get<double>();
  for (const auto& bj : j.at("bucket_accuracies")) {
    BucketRow b;
    b.lo = bj.at("lo").get<double>();
    b.hi = bj.at("hi").is_null() ? std::numeric_limits<double>::infinity() : bj.at("hi").get<double>();
    b.n = bj.at("n").get<size_t>();
    b.accuracy = opt_from_json(bj.at("accuracy"));
    r.buckets.push_back(b);
  }
  if (!j.at("flip_test").is_null()) {
    FlipStats f;
    f.mean_accuracy = j["flip_test"].at("mean_accuracy").get<double>();
    f.variance = j["flip_test"].at("variance").get<double>();
    f.n_runs = j["flip_test"].at("n_runs").get<size_t>();
    r.flip = f;
  }
  for (const auto& sj : j.at("scenario_stats")) {
    ScenarioRow s;
    s.scenario = scenario_from_string(sj.at("scenario").get<std::string>());
    s.n = sj.at("n").get<size_t>();
    s.avg_gain = sj.at("avg_gain").get<double>();
    s.degrade_pct = sj.at("degrade_pct").get<double>();
    s.improve_pct = sj.at("improve_pct").get<double>();
    r.scenarios.push_back(s);
  }
  for (const auto& pj : j.at("rank_scatter"))
    r.rank_scatter.emplace_back(pj.at(0).get<double>(), pj.at(1).get<double>());
  return r;
}

void emit_report(const EvalReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  atomic_write_file(path("report.json"), report_to_json(report) + "\n");

  std::string main_csv = "slice,key,n,accuracy_pct\n";
  auto add_row = [&](const std::string& slice, const std::string& key, size_t n,
                     const std::optional<double>& acc) {
    main_csv += slice + "," + key + "," + std::to_string(n) + "," +
                (acc ? format_pct(*acc) : std::string()) + "\n";
  };
  add_row("overall", "", report.n_pairs, report.accuracy_overall);
  add_row("easy", "", report.n_easy, report.accuracy_easy);
  for (const auto& s : report.by_language) add_row("language", s.key, s.n, s.accuracy);
  for (const auto& s : report.by_scenario) add_row("scenario", s.key, s.n, s.accuracy);
  for (const auto& s : report.by_source) add_row("refined_source", s.key, s.n, s.accuracy);
  main_csv += "abstention_rate,," + std::to_string(report.n_pairs) + "," +
              format_pct(report.abstention_rate) + "\n";
  if (report.spearman_rho)
    main_csv += "spearman_rho,," + std::to_string(report.n_pairs) + "," +
                format_rho(*report.spearman_rho) + "\n";
  if (report.class3_accuracy)
    main_csv += "class3,," + std::to_string(report.n_pairs) + "," +
                format_pct(*report.class3_accuracy) + "\n";
  atomic_write_file(path("main.csv"), main_csv);

  std::string scen_csv = "scenario,n,avg_gain,degrade_pct,improve_pct,accuracy_pct\n";
  for (const auto& s : report.scenarios) {
    std::string acc;
    for (const auto& a : report.by_scenario)
      if (a.key == to_string(s.scenario) && a.accuracy) acc = format_pct(*a.accuracy);
    char avg[32];
    std::snprintf(avg, sizeof(avg), "%.2f", s.avg_gain);
    scen_csv += to_string(s.scenario) + "," + std::to_string(s.n) + "," + avg + "," +
                format_pct_value(s.degrade_pct) + "," + format_pct_value(s.improve_pct) + "," +
                acc + "\n";
  }
  atomic_write_file(path("scenario.csv"), scen_csv);

  std::string ref_csv = "refiner_model,n,accuracy_pct\n";
  for (const auto& s : report.by_refiner)
    ref_csv += s.key + "," + std::to_string(s.n) + "," +
               (s.accuracy ? format_pct(*s.accuracy) : std::string()) + "\n";
  atomic_write_file(path("refiner.csv"), ref_csv);

  std::string bucket_csv = "lo,hi,n,accuracy_pct\n";
  for (const auto& b : report.buckets)
    bucket_csv += format_edge(b.lo) + "," + format_edge(b.hi) + "," + std::to_string(b.n) + "," +
                  (b.accuracy ? format_pct(*b.accuracy) : std::string()) + "\n";
  atomic_write_file(path("buckets.csv"), bucket_csv);

  if (report.flip) {
    std::string flip_csv = "n_runs,mean_accuracy_pct,variance\n";
    char var[64];
    std::snprintf(var, sizeof(var), "%.3e", report.flip->variance);
    flip_csv += std::to_string(report.flip->n_runs) + "," + format_pct(report.flip->mean_accuracy) +
                "," + var + "\n";
    atomic_write_file(path("flip.csv"), flip_csv);
  }

  std::string scatter = "actual_rank\tpredicted_rank\n";
  for (const auto& [a, p] : report.rank_scatter) {
    char line[80];
    std::snprintf(line, sizeof(line), "%.1f\t%.1f\n", a, p);
    scatter += line;
  }
  atomic_write_file(path("scatter.tsv"), scatter);
}

}  // namespace effjudge
