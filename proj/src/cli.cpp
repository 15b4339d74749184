#include "effjudge/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <memory>

#include "effjudge/corpus.hpp"
#include "effjudge/eval.hpp"
#include "effjudge/executor.hpp"
#include "effjudge/judge.hpp"
#include "effjudge/learned.hpp"
#include "effjudge/refiner.hpp"
#include "effjudge/serialize.hpp"
#include "effjudge/util.hpp"

namespace effjudge {

namespace {

// Optional pipeline file: default execution config, a registry of named
// backends, and a global seed. Every referenced path must resolve when
// the file is loaded, before any stage runs.
struct PipelineConfig {
  std::string exec_config;
  std::string data_dir;  // relative stage paths (datasets, models, reports) resolve here
  struct NamedBackend {
    std::string kind;  // "http" | "scripted"
    std::string path;
  };
  std::map<std::string, NamedBackend> backends;
  std::optional<uint64_t> seed;

  std::string resolve(const std::string& path) const {
    if (path.empty() || data_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(data_dir) / path).string();
  }

  static PipelineConfig from_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
    PipelineConfig cfg;
    auto check_exists = [](const std::string& p, const std::string& what) {
      if (!std::filesystem::exists(p))
        throw ConfigError(what + " '" + p + "' referenced by the pipeline config does not exist");
    };
    if (j.contains("data_dir")) {
      cfg.data_dir = j["data_dir"].get<std::string>();
      std::filesystem::create_directories(cfg.data_dir);
    }
    if (j.contains("exec_config")) {
      cfg.exec_config = j["exec_config"].get<std::string>();
      check_exists(cfg.exec_config, "exec config");
    }
    if (j.contains("backends")) {
      for (auto it = j["backends"].begin(); it != j["backends"].end(); ++it) {
        NamedBackend nb;
        nb.kind = it.value().value("kind", "http");
        if (nb.kind != "http" && nb.kind != "scripted")
          throw ConfigError("backend '" + it.key() + "' has unknown kind '" + nb.kind + "'");
        nb.path = it.value().at("path").get<std::string>();
        check_exists(nb.path, "backend config");
        cfg.backends[it.key()] = nb;
      }
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    return cfg;
  }
};

struct BackendFlags {
  std::string http_config;
  std::string script;
  std::string name = "default";  // lookup key into the pipeline registry
  std::string model_override;

  void attach(CLI::App* cmd, bool with_model = false) {
    auto* a = cmd->add_option("--backend", http_config, "HTTP backend config JSON");
    auto* b = cmd->add_option("--scripted", script, "scripted backend response file");
    a->excludes(b);
    cmd->add_option("--backend-name", name, "named backend from the --config registry");
    if (with_model)
      cmd->add_option("--model", model_override, "override the backend's model name");
  }

  std::unique_ptr<CompletionBackend> make(const PipelineConfig& pipeline) const {
    std::string http = http_config, scripted = script;
    if (http.empty() && scripted.empty()) {
      auto it = pipeline.backends.find(name);
      if (it != pipeline.backends.end())
        (it->second.kind == "http" ? http : scripted) = it->second.path;
    }
    if (!scripted.empty()) {
      auto backend = ScriptedBackend::from_json_file(scripted);
      if (!model_override.empty()) backend->set_model_name(model_override);
      return backend;
    }
    if (!http.empty()) {
      BackendConfig cfg = BackendConfig::from_json_file(http);
      if (!model_override.empty()) cfg.model_name = model_override;
      return std::make_unique<HttpBackend>(cfg);
    }
    throw ConfigError("no backend given; pass --backend, --scripted, or a --config registry");
  }
};

std::vector<PairRecord> load_and_dedupe(const std::string& path) {
  auto deduped = dedupe_pairs(load_pairs(path));
  if (deduped.dropped > 0)
    std::cerr << "warning: dropped " << deduped.dropped << " no-op pair(s) from " << path << "\n";
  return std::move(deduped.records);
}

SubjectLanguage parse_lang(const std::string& s) { return subject_language_from_string(s); }

int cmd_synth(size_t count, uint64_t seed, const std::string& out, const std::string& langs,
              const std::vector<std::string>& families) {
  SynthOptions options;
  options.languages.clear();
  std::stringstream ss(langs);
  std::string item;
  while (std::getline(ss, item, ',')) options.languages.push_back(parse_lang(trim(item)));
  options.families = families;
  auto records = synthesize_pairs(count, seed, options);
  write_pairs(records, out);
  std::cerr << "synth: " << records.size() << " record(s) -> " << out << "\n";
  return 0;
}

int cmd_refine(const std::string& in, const std::string& out, size_t steps,
               const BackendFlags& backend_flags, int in_flight,
               const PipelineConfig& pipeline) {
  auto records = load_and_dedupe(in);
  auto backend = backend_flags.make(pipeline);
  if (!backend_flags.script.empty()) in_flight = 1;  // scripted replies are ordered
  auto refined = refine_records(records, steps, *backend, in_flight);
  write_pairs(refined, out);
  std::cerr << "refine: " << records.size() << " -> " << refined.size() << " record(s) -> " << out
            << "\n";
  return 0;
}

int cmd_label(const std::string& in, const std::string& out, std::string exec_config,
              bool keep_inconsistent, const PipelineConfig& pipeline) {
  auto records = load_and_dedupe(in);
  if (exec_config.empty()) exec_config = pipeline.exec_config;
  ExecutionConfig cfg =
      exec_config.empty() ? ExecutionConfig::defaults() : ExecutionConfig::from_json_file(exec_config);
  PairTimer timer(cfg);

  std::vector<PairRecord> labeled;
  size_t failed = 0, inconsistent = 0;
  for (auto& rec : records) {
    LabelResult result = timer.time_pair(rec);
    if (std::holds_alternative<LabelFailure>(result)) {
      const auto& f = std::get<LabelFailure>(result);
      std::cerr << "label: skipped " << f.pair_id << " (" << f.side << " "
                << to_string(f.verdict) << ": " << f.detail << ")\n";
      ++failed;
      continue;
    }
    PairLabel label = std::get<PairLabel>(result);
    if (!label.consistent && !keep_inconsistent) {
      std::cerr << "label: discarded " << rec.pair.pair_id << " (inconsistent runs)\n";
      ++inconsistent;
      continue;
    }
    rec.label = label;
    labeled.push_back(rec);
  }
  write_pairs(labeled, out);
  std::cerr << "label: " << labeled.size() << " labeled, " << inconsistent << " inconsistent, "
            << failed << " failed -> " << out << "\n";
  return 0;
}

int cmd_split(const std::string& in, double train, double val, double test, uint64_t seed,
              const std::string& out_prefix) {
  auto records = load_pairs(in);
  SplitSpec spec{train, val, test, seed};
  SplitResult result = split(records, spec);
  write_pairs(result.train, out_prefix + ".train.jsonl");
  write_pairs(result.val, out_prefix + ".val.jsonl");
  write_pairs(result.test, out_prefix + ".test.jsonl");
  std::cerr << "split: " << result.train.size() << "/" << result.val.size() << "/"
            << result.test.size() << " -> " << out_prefix << ".{train,val,test}.jsonl\n";
  return 0;
}

int cmd_train(const std::string& mode, const std::string& in, const std::string& out,
              size_t epochs, double lr, uint64_t seed) {
  auto records = load_pairs(in);
  TrainHyperparams hp{epochs, lr, seed};
  JudgeModel model = judge_mode_from_string(mode) == JudgeMode::Classify
                         ? train_classifier(records, hp)
                         : train_regressor(records, hp);
  save_model(model, out);
  std::cerr << "train: " << mode << " model -> " << out << "\n";
  return 0;
}

int cmd_judge(const std::string& mode_str, const std::string& strategy_str, const std::string& in,
              const std::string& out, const std::string& learned_path,
              const BackendFlags& backend_flags, const std::string& order_str, uint64_t seed,
              const std::string& bank_path, size_t bank_size, uint64_t bank_seed,
              const PipelineConfig& pipeline) {
  auto records = load_pairs(in);
  JudgeMode mode = judge_mode_from_string(mode_str);
  Strategy strategy = strategy_from_string(strategy_str);

  JudgeInputs inputs;
  std::unique_ptr<CompletionBackend> backend;
  JudgeModel model;
  if (strategy == Strategy::Learned) {
    if (learned_path.empty()) throw ConfigError("learned strategy needs --learned <model.json>");
    model = load_model(learned_path);
    inputs.model = &model;
  } else {
    backend = backend_flags.make(pipeline);
    inputs.backend = backend.get();
  }
  FewShotBank bank;
  if (strategy == Strategy::FewShot || strategy == Strategy::FewShotCoT) {
    if (bank_path.empty()) throw ConfigError("few-shot strategies need --bank <labeled.jsonl>");
    bank = build_fewshot_bank(load_pairs(bank_path), bank_size, bank_seed);
    inputs.bank = &bank;
  }

  std::vector<JudgeVerdict> verdicts;
  for (const auto& rec : records) {
    if (mode == JudgeMode::Classify) {
      PresentationOrder order;
      if (order_str == "random") {
        order.order = randomized_slot_order(rec.pair.pair_id, seed);
        order.seed = seed;
      } else {
        order.order = slot_order_from_string(order_str);
      }
      verdicts.push_back(judge_classify(rec, order, strategy, inputs));
    } else {
      verdicts.push_back(judge_regress(rec, strategy, inputs));
    }
  }
  write_records_with_verdicts(records, verdicts, out);
  std::cerr << "judge: " << verdicts.size() << " verdict(s) -> " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& labels_path, const std::string& verdicts_path,
             const std::string& out_dir, const std::vector<double>& buckets, size_t flip_runs,
             uint64_t flip_seed, const std::string& learned_path) {
  auto labeled = load_pairs(labels_path);
  auto verdicts = load_verdicts(verdicts_path);
  EvalOptions options;
  if (!buckets.empty()) options.bucket_edges = buckets;
  EvalReport report = compute_report(labeled, verdicts, options);

  if (flip_runs > 0) {
    if (learned_path.empty())
      throw ConfigError("--flip-runs needs --learned <model.json> to re-judge the pairs");
    JudgeModel model = load_model(learned_path);
    JudgeInputs inputs;
    inputs.model = &model;
    JudgeRunner runner = [&](const std::vector<PairRecord>& pairs, uint64_t seed) {
      std::vector<JudgeVerdict> out;
      for (const auto& rec : pairs) {
        PresentationOrder order{randomized_slot_order(rec.pair.pair_id, seed), seed};
        out.push_back(judge_classify(rec, order, Strategy::Learned, inputs));
      }
      return out;
    };
    std::vector<uint64_t> seeds;
    for (size_t i = 0; i < flip_runs; ++i) seeds.push_back(flip_seed + i);
    report.flip = flip_test(runner, labeled, seeds);
  }

  emit_report(report, out_dir);
  std::cerr << "eval: report -> " << out_dir << "\n";
  return 0;
}

int cmd_explain(const std::string& in, const std::string& pair_id,
                const BackendFlags& backend_flags, const std::string& out,
                const PipelineConfig& pipeline) {
  auto records = load_pairs(in);
  const PairRecord* found = nullptr;
  for (const auto& rec : records)
    if (rec.pair.pair_id == pair_id) found = &rec;
  if (!found) throw JoinError("pair '" + pair_id + "' not found in " + in);
  if (!found->label) throw DomainError("pair '" + pair_id + "' has no label; run the label stage first");

  double g = found->label->gain_ratio;
  Winner winner = found->label->winner;
  double fraction = winner == Winner::RefinedFaster ? g : 1.0 / g;
  auto backend = backend_flags.make(pipeline);
  std::string text = explain(*found, fraction, winner, *backend);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    atomic_write_file(out, text + "\n");
    std::cerr << "explain: -> " << out << "\n";
  }
  return 0;
}

int cmd_report(const std::string& in, const std::string& out_dir) {
  EvalReport report = report_from_json(read_file(in));
  emit_report(report, out_dir);
  std::cerr << "report: tables -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Builds, labels, judges, and scores code-efficiency pairs"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "pipeline config JSON (defaults for the stages)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate pairs with designed winners");
  size_t synth_count = 0;
  uint64_t synth_seed = 0;
  std::string synth_out, synth_langs = "python,cpp";
  std::vector<std::string> synth_families;
  synth->add_option("--count", synth_count, "number of pairs")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output pair file")->required();
  synth->add_option("--langs", synth_langs, "comma-separated subject languages");
  synth->add_option("--families", synth_families, "template families to use")->delimiter(',');

  // refine
  auto* refine = app.add_subcommand("refine", "ask a backend to refine originals");
  std::string refine_in, refine_out;
  size_t refine_steps = 1;
  int refine_in_flight = 1;
  BackendFlags refine_backend;
  refine->add_option("--in", refine_in)->required();
  refine->add_option("--out", refine_out)->required();
  refine->add_option("--steps", refine_steps, "chained refinement steps");
  refine->add_option("--in-flight", refine_in_flight, "max concurrent requests");
  refine_backend.attach(refine, /*with_model=*/true);

  // label
  auto* label = app.add_subcommand("label", "execute pairs and attach ground-truth labels");
  std::string label_in, label_out, label_cfg;
  bool keep_inconsistent = false;
  label->add_option("--in", label_in)->required();
  label->add_option("--out", label_out)->required();
  label->add_option("--exec-config", label_cfg, "execution config JSON");
  label->add_flag("--keep-inconsistent", keep_inconsistent, "keep pairs with inconsistent runs");

  // split
  auto* split_cmd = app.add_subcommand("split", "partition by problem without leakage");
  std::string split_in, split_prefix;
  double split_train = 0.8, split_val = 0.0, split_test = 0.2;
  uint64_t split_seed = 0;
  split_cmd->add_option("--in", split_in)->required();
  split_cmd->add_option("--train", split_train);
  split_cmd->add_option("--val", split_val);
  split_cmd->add_option("--test", split_test);
  auto* split_seed_opt = split_cmd->add_option("--seed", split_seed);
  split_cmd->add_option("--out-prefix", split_prefix)->required();

  // train
  auto* train = app.add_subcommand("train", "fit the local judge on labeled pairs");
  std::string train_mode = "classify", train_in, train_out;
  size_t train_epochs = 10;
  double train_lr = 0.1;
  uint64_t train_seed = 0;
  train->add_option("--mode", train_mode)->check(CLI::IsMember({"classify", "regress"}));
  train->add_option("--in", train_in)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--epochs", train_epochs);
  train->add_option("--lr", train_lr);
  auto* train_seed_opt = train->add_option("--seed", train_seed);

  // judge
  auto* judge = app.add_subcommand("judge", "judge pairs with a backend or the local model");
  std::string judge_mode = "classify", judge_strategy = "zero_shot", judge_in, judge_out;
  std::string judge_learned, judge_order = "random", judge_bank;
  uint64_t judge_seed = 0, judge_bank_seed = 0;
  size_t judge_bank_size = 4;
  BackendFlags judge_backend;
  judge->add_option("--mode", judge_mode)->check(CLI::IsMember({"classify", "regress"}));
  judge->add_option("--strategy", judge_strategy)
      ->check(CLI::IsMember({"zero_shot", "few_shot", "zero_shot_cot", "few_shot_cot", "learned"}));
  judge->add_option("--in", judge_in)->required();
  judge->add_option("--out", judge_out)->required();
  judge->add_option("--learned", judge_learned, "model file for --strategy learned");
  judge->add_option("--order", judge_order)
      ->check(CLI::IsMember({"random", "original_first", "refined_first"}));
  auto* judge_seed_opt = judge->add_option("--seed", judge_seed, "seed for random presentation order");
  judge->add_option("--bank", judge_bank, "labeled train file for few-shot exemplars");
  judge->add_option("--bank-size", judge_bank_size);
  judge->add_option("--bank-seed", judge_bank_seed);
  judge_backend.attach(judge);

  // eval
  auto* eval = app.add_subcommand("eval", "score verdicts against labels");
  std::string eval_labels, eval_verdicts, eval_out, eval_learned;
  std::vector<double> eval_buckets;
  size_t eval_flip_runs = 0;
  uint64_t eval_flip_seed = 0;
  eval->add_option("--labels", eval_labels)->required();
  eval->add_option("--verdicts", eval_verdicts)->required();
  eval->add_option("--out-dir", eval_out)->required();
  eval->add_option("--buckets", eval_buckets, "bucket edges for |g-1|")->delimiter(',');
  eval->add_option("--flip-runs", eval_flip_runs, "re-judge runs for the order-bias test");
  auto* eval_flip_seed_opt = eval->add_option("--flip-seed", eval_flip_seed);
  eval->add_option("--learned", eval_learned, "model used by --flip-runs");

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "ask a backend why the winner is faster");
  std::string explain_in, explain_pair, explain_out;
  BackendFlags explain_backend;
  explain_cmd->add_option("--in", explain_in)->required();
  explain_cmd->add_option("--pair-id", explain_pair)->required();
  explain_cmd->add_option("--out", explain_out, "output file (default: stdout)");
  explain_backend.attach(explain_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "re-emit tables from a report.json");
  std::string report_in, report_out;
  report_cmd->add_option("--in", report_in)->required();
  report_cmd->add_option("--out-dir", report_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    PipelineConfig pipeline;
    if (!config_path.empty()) pipeline = PipelineConfig::from_file(config_path);
    if (pipeline.seed) {
      if (synth_seed_opt->count() == 0) synth_seed = *pipeline.seed;
      if (split_seed_opt->count() == 0) split_seed = *pipeline.seed;
      if (train_seed_opt->count() == 0) train_seed = *pipeline.seed;
      if (judge_seed_opt->count() == 0) judge_seed = *pipeline.seed;
      if (eval_flip_seed_opt->count() == 0) eval_flip_seed = *pipeline.seed;
    }
    for (std::string* p :
         {&synth_out, &refine_in, &refine_out, &label_in, &label_out, &split_in, &split_prefix,
          &train_in, &train_out, &judge_in, &judge_out, &judge_learned, &judge_bank, &eval_labels,
          &eval_verdicts, &eval_out, &eval_learned, &explain_in, &explain_out, &report_in,
          &report_out})
      *p = pipeline.resolve(*p);

    if (synth->parsed())
      return cmd_synth(synth_count, synth_seed, synth_out, synth_langs, synth_families);
    if (refine->parsed())
      return cmd_refine(refine_in, refine_out, refine_steps, refine_backend, refine_in_flight,
                        pipeline);
    if (label->parsed())
      return cmd_label(label_in, label_out, label_cfg, keep_inconsistent, pipeline);
    if (split_cmd->parsed())
      return cmd_split(split_in, split_train, split_val, split_test, split_seed, split_prefix);
    if (train->parsed())
      return cmd_train(train_mode, train_in, train_out, train_epochs, train_lr, train_seed);
    if (judge->parsed())
      return cmd_judge(judge_mode, judge_strategy, judge_in, judge_out, judge_learned,
                       judge_backend, judge_order, judge_seed, judge_bank, judge_bank_size,
                       judge_bank_seed, pipeline);
    if (eval->parsed())
      return cmd_eval(eval_labels, eval_verdicts, eval_out, eval_buckets, eval_flip_runs,
                      eval_flip_seed, eval_learned);
    if (explain_cmd->parsed())
      return cmd_explain(explain_in, explain_pair, explain_backend, explain_out, pipeline);
    if (report_cmd->parsed()) return cmd_report(report_in, report_out);
  } catch (const Error& e) {
    std::cerr << "effjudge: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "effjudge: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace effjudge
