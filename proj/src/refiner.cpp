#include "effjudge/refiner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <set>
#include <thread>

#include <httplib.h>

#include "effjudge/util.hpp"

namespace effjudge {

void BackendConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("backend endpoint is empty");
  if (timeout_seconds <= 0.0) throw ConfigError("backend timeout must be positive");
  if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
  if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
}

BackendConfig BackendConfig::from_json_file(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  BackendConfig cfg;
  cfg.endpoint = j.at("endpoint").get<std::string>();
  cfg.model_name = j.value("model_name", std::string{});
  cfg.api_key_env = j.value("api_key_env", std::string{});
  cfg.temperature = j.value("temperature", 0.0);
  cfg.max_output_tokens = j.value("max_output_tokens", 1024);
  cfg.timeout_seconds = j.value("timeout_seconds", 60.0);
  cfg.max_retries = j.value("max_retries", 3);
  cfg.retry_backoff_ms = j.value("retry_backoff_ms", 250);
  cfg.max_in_flight = j.value("max_in_flight", 1);
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

struct SplitUrl {
  std::string host;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_endpoint(const std::string& endpoint) {
  size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must start with http://");
  size_t slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
}

std::string HttpBackend::complete(const std::string& prompt) {
  SplitUrl url = split_endpoint(config_.endpoint);

  nlohmann::json body;
  body["model"] = config_.model_name;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_output_tokens;
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::milliseconds(config_.retry_backoff_ms << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(url.host);
    auto seconds = static_cast<time_t>(config_.timeout_seconds);
    auto micros = static_cast<long>((config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Result res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;  // retryable
    }
    if (res->status != 200)
      throw BackendError("http status " + std::to_string(res->status) + ": " + res->body,
                         /*retryable=*/false);

    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw BackendError("response is not valid JSON", false);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("unexpected response shape: ") + e.what(), false);
    }
  }
  throw BackendError("gave up after " + std::to_string(config_.max_retries + 1) +
                         " attempts; last: " + last_error,
                     /*retryable=*/true);
}

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, std::string model_name)
    : responses_(std::move(responses)), model_name_(std::move(model_name)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json_file(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  std::vector<std::string> responses = j.at("responses").get<std::vector<std::string>>();
  std::string name = j.value("model_name", std::string("scripted"));
  return std::make_unique<ScriptedBackend>(std::move(responses), std::move(name));
}

std::string ScriptedBackend::complete(const std::string& /*prompt*/) {
  std::lock_guard<std::mutex> lock(mu_);
  if (next_ >= responses_.size())
    throw BackendError("scripted backend ran out of responses", /*retryable=*/false);
  return responses_[next_++];
}

// ---------------------------------------------------------------------------
// Refinement

std::string build_refinement_prompt(const CodeSample& original) {
  return "Update the given code to make it more efficient. " + original.text;
}

namespace {

bool looks_like_prose(std::string_view line) {
  static const std::set<std::string, std::less<>> kCodeWords = {
      "import", "from",  "def",   "class",   "return", "if",      "elif",   "else",
      "for",    "while", "try",   "except",  "with",   "pass",    "break",  "continue",
      "print",  "use",   "fn",    "let",     "mut",    "int",     "long",   "double",
      "float",  "void",  "include", "using", "namespace", "end",  "puts",   "my",
      "sub",    "package", "require"};
  static const std::string kCodeChars = "=(){}[];<>#`$%&*+/\\|~^";

  std::string t = trim(line);
  if (t.empty()) return false;  // blank lines are kept as-is
  for (char c : t)
    if (kCodeChars.find(c) != std::string::npos) return false;
  size_t end = 0;
  while (end < t.size() && (std::isalnum(static_cast<unsigned char>(t[end])) || t[end] == '_')) ++end;
  if (kCodeWords.count(std::string_view(t).substr(0, end)) > 0) return false;
  return true;
}

}  // namespace

std::string extract_code(const std::string& completion) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= completion.size()) {
    size_t nl = completion.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(completion.substr(pos));
      break;
    }
    lines.push_back(completion.substr(pos, nl - pos));
    pos = nl + 1;
  }

  // fenced block: from the first ``` line to the next ``` line
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).rfind("```", 0) != 0) continue;
    std::string block;
    for (size_t k = i + 1; k < lines.size(); ++k) {
      if (trim(lines[k]).rfind("```", 0) == 0) break;
      block += lines[k];
      block += '\n';
    }
    if (trim(block).empty()) throw RefinementParseError("fenced block is empty");
    return block;
  }

  std::string kept;
  for (const auto& line : lines) {
    if (looks_like_prose(line)) continue;
    kept += line;
    kept += '\n';
  }
  if (trim(kept).empty()) throw RefinementParseError("completion contains no code");
  return kept;
}

CodeSample refine(const CodeSample& original, CompletionBackend& backend) {
  std::string completion = backend.complete(build_refinement_prompt(original));
  CodeSample refined;
  refined.sample_id = original.sample_id + ".m";
  refined.problem_id = original.problem_id;
  refined.subject_language = original.subject_language;
  refined.source = Source::machine(backend.model_name());
  refined.text = extract_code(completion);
  refined.parent_id = original.sample_id;
  return refined;
}

std::vector<CodeSample> chain_refine(const CodeSample& original, size_t steps,
                                     CompletionBackend& backend) {
  if (steps < 1) throw DomainError("steps must be at least 1");
  std::vector<CodeSample> chain;
  const CodeSample* current = &original;
  for (size_t s = 0; s < steps; ++s) {
    try {
      chain.push_back(refine(*current, backend));
    } catch (const RefinementParseError&) {
      break;
    }
    current = &chain.back();
  }
  return chain;
}

std::vector<PairRecord> refine_records(const std::vector<PairRecord>& records, size_t steps,
                                       CompletionBackend& backend, int in_flight) {
  std::vector<std::vector<CodeSample>> chains(records.size());
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto work = [&](size_t begin, size_t stride) {
    for (size_t i = begin; i < records.size(); i += stride) {
      try {
        chains[i] = chain_refine(records[i].original, steps, backend);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int workers = std::max(1, std::min<int>(in_flight, static_cast<int>(records.size())));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, static_cast<size_t>(w), workers);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<PairRecord> out;
  for (size_t i = 0; i < records.size(); ++i) {
    out.push_back(records[i]);
    const CodeSample* prev = &records[i].original;
    for (size_t s = 0; s < chains[i].size(); ++s) {
      PairRecord rec;
      rec.pair.pair_id = records[i].pair.pair_id + ".r" + std::to_string(s + 1);
      rec.original = *prev;
      rec.refined = chains[i][s];
      rec.pair.original_id = rec.original.sample_id;
      rec.pair.refined_id = rec.refined.sample_id;
      rec.pair.scenario = scenario_for(rec.original.source, rec.refined.source);
      rec.suite = records[i].suite;
      rec.pair.test_suite_id = rec.suite.test_suite_id;
      out.push_back(std::move(rec));
      prev = &chains[i][s];
    }
  }
  return out;
}

}  // namespace effjudge
