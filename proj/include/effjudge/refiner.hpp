#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

struct BackendConfig {
  std::string endpoint;     // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model_name;
  std::string api_key_env;  // env var holding the key; the value is never persisted
  double temperature = 0.0;
  int max_output_tokens = 1024;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  int max_in_flight = 1;

  void validate() const;
  static BackendConfig from_json_file(const std::string& path);
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string model_name() const = 0;
};

// Chat-completion HTTP backend. Transport failures and 429/5xx responses
// are retried with exponential backoff up to max_retries; other HTTP
// errors fail immediately.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(BackendConfig config);
  std::string complete(const std::string& prompt) override;
  std::string model_name() const override { return config_.model_name; }

 private:
  BackendConfig config_;
};

// Replays canned completions in request order. Used by tests and offline
// pipeline runs; it therefore lives here rather than in test code.
class ScriptedBackend : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses,
                           std::string model_name = "scripted");
  // file format: {"responses": ["...", ...]}
  static std::unique_ptr<ScriptedBackend> from_json_file(const std::string& path);

  std::string complete(const std::string& prompt) override;
  std::string model_name() const override { return model_name_; }
  void set_model_name(std::string name) { model_name_ = std::move(name); }
  size_t consumed() const { return next_; }

 private:
  std::vector<std::string> responses_;
  std::string model_name_;
  size_t next_ = 0;
  std::mutex mu_;
};

std::string build_refinement_prompt(const CodeSample& original);

// First fenced code block wins; without a fence, lines that look like
// prose are dropped. Throws RefinementParseError when nothing code-like
// remains.
std::string extract_code(const std::string& completion);

// One greedy refinement of `original`; the result is a Machine sample with
// parent_id pointing back at the input.
CodeSample refine(const CodeSample& original, CompletionBackend& backend);

// Up to `steps` chained refinements; stops early (returning the prefix)
// when a completion yields no code.
std::vector<CodeSample> chain_refine(const CodeSample& original, size_t steps,
                                     CompletionBackend& backend);

// Stage helper: passes the input records through and, for every record,
// chains refinements of its original sample, appending one new pair per
// step (original->m1 first, then m1->m2, ...). `in_flight` > 1 refines
// records concurrently; output order stays the input order.
std::vector<PairRecord> refine_records(const std::vector<PairRecord>& records, size_t steps,
                                       CompletionBackend& backend, int in_flight = 1);

}  // namespace effjudge
