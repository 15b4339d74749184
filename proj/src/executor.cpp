#include "effjudge/executor.hpp"

#include <errno.h>
#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <mutex>

#include "effjudge/util.hpp"

namespace fs = std::filesystem;

namespace effjudge {

std::string to_string(RunVerdict v) {
  switch (v) {
    case RunVerdict::Correct: return "correct";
    case RunVerdict::WrongOutput: return "wrong_output";
    case RunVerdict::Timeout: return "timeout";
    case RunVerdict::RuntimeError: return "runtime_error";
    case RunVerdict::CompileError: return "compile_error";
  }
  return "unknown";
}

GainBreakdown classify_gain(double g) {
  if (!(g > 0.0)) throw DomainError("gain ratio must be positive");
  GainBreakdown b;
  if (g < 0.9)
    b.class3 = GainClass::Degradation;
  else if (g > 1.1)
    b.class3 = GainClass::Improvement;
  else
    b.class3 = GainClass::NonImprovement;
  b.winner = g > 1.0 ? Winner::RefinedFaster : Winner::OriginalFaster;
  b.easy = g < 0.9 || g > 1.1;  // |g - 1| > 0.10, written threshold-exact
  return b;
}

ExecutionConfig ExecutionConfig::defaults() {
  ExecutionConfig cfg;
  cfg.languages[SubjectLanguage::Python] = {std::nullopt, "python3 {src}"};
  cfg.languages[SubjectLanguage::Cpp] = {"g++ -O2 -std=c++17 -o {bin} {src}", "{bin}"};
  cfg.languages[SubjectLanguage::Ruby] = {std::nullopt, "ruby {src}"};
  cfg.languages[SubjectLanguage::Perl] = {std::nullopt, "perl {src}"};
  cfg.languages[SubjectLanguage::Rust] = {"rustc -O -o {bin} {src}", "{bin}"};
  return cfg;
}

ExecutionConfig ExecutionConfig::from_json_file(const std::string& path) {
  ExecutionConfig cfg = defaults();
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  if (j.contains("workdir")) cfg.workdir = j["workdir"].get<std::string>();
  if (j.contains("time_limit_override_ms"))
    cfg.time_limit_override_ms = j["time_limit_override_ms"].get<int64_t>();
  if (j.contains("compile_timeout_ms")) cfg.compile_timeout_ms = j["compile_timeout_ms"].get<int64_t>();
  if (j.contains("languages")) {
    for (auto it = j["languages"].begin(); it != j["languages"].end(); ++it) {
      SubjectLanguage lang = subject_language_from_string(it.key());
      LanguageCommands cmds;
      if (it.value().contains("compile")) cmds.compile = it.value()["compile"].get<std::string>();
      if (!it.value().contains("run")) throw ConfigError("language " + it.key() + " missing run command");
      cmds.run = it.value()["run"].get<std::string>();
      cfg.languages[lang] = cmds;
    }
  }
  return cfg;
}

namespace {

// ---------------------------------------------------------------------------
// Child process plumbing

struct ProcessResult {
  bool timed_out = false;
  bool signaled = false;
  int exit_code = 0;
  double wall_ms = 0.0;
};

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& stdin_path,
                          const std::string& stdout_path, const std::string& stderr_path,
                          const std::string& cwd, int64_t timeout_ms) {
  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  int in_fd = ::open(stdin_path.empty() ? "/dev/null" : stdin_path.c_str(), O_RDONLY);
  if (in_fd < 0) throw IoError("cannot open stdin file " + stdin_path);
  int out_fd = ::open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  int err_fd = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (out_fd < 0 || err_fd < 0) {
    ::close(in_fd);
    if (out_fd >= 0) ::close(out_fd);
    throw IoError("cannot open output capture files");
  }

  auto t0 = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(in_fd);
    ::close(out_fd);
    ::close(err_fd);
    throw IoError("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);  // own process group so a timeout kill reaps helpers too
    ::dup2(in_fd, 0);
    ::dup2(out_fd, 1);
    ::dup2(err_fd, 2);
    ::close(in_fd);
    ::close(out_fd);
    ::close(err_fd);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(126);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // parent side of the race
  ::close(in_fd);
  ::close(out_fd);
  ::close(err_fd);

  ProcessResult result;
  auto deadline = t0 + std::chrono::milliseconds(timeout_ms);
  int status = 0;
  bool reaped = false;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      reaped = true;
      break;
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      result.signaled = true;
      result.exit_code = -1;
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      result.timed_out = true;
      ::waitpid(pid, &status, 0);
      break;
    }
    struct timespec ts {0, 200'000};
    ::nanosleep(&ts, nullptr);
  }
  auto t1 = std::chrono::steady_clock::now();
  result.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (reaped) {
    if (WIFEXITED(status)) {
      result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      result.signaled = true;
      result.exit_code = 128 + WTERMSIG(status);
    }
  }
  return result;
}

std::vector<std::string> tokenize_command(const std::string& tmpl) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : tmpl) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void substitute(std::string& token, const std::string& key, const std::string& value) {
  size_t pos;
  while ((pos = token.find(key)) != std::string::npos) token.replace(pos, key.size(), value);
}

std::vector<std::string> instantiate_command(const std::string& tmpl, const std::string& src,
                                             const std::string& bin, const std::string& stdin_path) {
  auto tokens = tokenize_command(tmpl);
  for (auto& t : tokens) {
    substitute(t, "{src}", src);
    substitute(t, "{bin}", bin);
    substitute(t, "{stdin}", stdin_path);
  }
  return tokens;
}

bool executable_on_path(const std::string& name) {
  if (name.find('/') != std::string::npos) return ::access(name.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string p(path);
  size_t pos = 0;
  while (pos <= p.size()) {
    size_t colon = p.find(':', pos);
    std::string dir = p.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    if (!dir.empty() && ::access((dir + "/" + name).c_str(), X_OK) == 0) return true;
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  return false;
}

const char* source_extension(SubjectLanguage lang) {
  switch (lang) {
    case SubjectLanguage::Python: return ".py";
    case SubjectLanguage::Cpp: return ".cpp";
    case SubjectLanguage::Ruby: return ".rb";
    case SubjectLanguage::Perl: return ".pl";
    case SubjectLanguage::Rust: return ".rs";
  }
  return ".txt";
}

// Trailing whitespace per line and trailing newlines are not part of the
// answer; every judge output comparison goes through this.
std::string normalize_output(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  size_t pos = 0;
  while (pos < raw.size()) {
    size_t nl = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos : nl - pos);
    size_t end = line.size();
    while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t' || line[end - 1] == '\r')) --end;
    out.append(line.substr(0, end));
    if (nl == std::string_view::npos) break;
    out.push_back('\n');
    pos = nl + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string read_tail(const std::string& path, size_t max_bytes = 512) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const IoError&) {
    return {};
  }
  if (content.size() > max_bytes) content = content.substr(content.size() - max_bytes);
  return trim(content);
}

std::mutex& timing_lane() {
  static std::mutex lane;
  return lane;
}

// A compiled (or interpreter-ready) program in its own scratch directory.
class PreparedProgram {
 public:
  static std::unique_ptr<PreparedProgram> prepare(const CodeSample& sample,
                                                  const ExecutionConfig& cfg,
                                                  std::optional<RunOutcome>& failure) {
    auto lang_it = cfg.languages.find(sample.subject_language);
    if (lang_it == cfg.languages.end())
      throw ConfigError("no commands configured for language " + to_string(sample.subject_language));
    const LanguageCommands& cmds = lang_it->second;

    std::string tool = tokenize_command(cmds.compile ? *cmds.compile : cmds.run).at(0);
    if (tool.find('{') == std::string::npos && !executable_on_path(tool))
      throw ConfigError("toolchain '" + tool + "' for " + to_string(sample.subject_language) +
                        " not found");

    auto prog = std::unique_ptr<PreparedProgram>(new PreparedProgram);
    fs::path base = cfg.workdir.empty() ? fs::temp_directory_path() : fs::path(cfg.workdir);
    fs::create_directories(base);
    std::string tmpl = (base / "effjudge-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (::mkdtemp(buf.data()) == nullptr) throw IoError("mkdtemp failed in " + base.string());
    prog->dir_ = buf.data();

    prog->src_ = (fs::path(prog->dir_) / ("main" + std::string(source_extension(sample.subject_language)))).string();
    atomic_write_file(prog->src_, sample.text);
    prog->bin_ = (fs::path(prog->dir_) / "prog").string();
    prog->run_template_ = cmds.run;

    if (cmds.compile) {
      auto argv = instantiate_command(*cmds.compile, prog->src_, prog->bin_, "");
      std::string log = (fs::path(prog->dir_) / "compile.log").string();
      ProcessResult pr = run_process(argv, "", log, log, prog->dir_, cfg.compile_timeout_ms);
      if (pr.timed_out || pr.exit_code != 0) {
        RunOutcome out;
        out.verdict = RunVerdict::CompileError;
        out.diagnostic = pr.timed_out ? "compiler timed out" : read_tail(log);
        failure = out;
        return prog;  // keep the directory alive until the caller is done
      }
    }
    return prog;
  }

  ~PreparedProgram() {
    std::error_code ec;
    if (!dir_.empty()) fs::remove_all(dir_, ec);
  }

  RunOutcome run(const TestSuite& suite, const ExecutionConfig& cfg) const {
    int64_t limit = cfg.time_limit_override_ms.value_or(suite.time_limit_ms);
    std::string stdin_path = (fs::path(dir_) / "in.txt").string();
    std::string stdout_path = (fs::path(dir_) / "out.txt").string();
    std::string stderr_path = (fs::path(dir_) / "err.txt").string();

    RunOutcome outcome;
    double total_ms = 0.0;
    std::string digest_input;
    for (size_t i = 0; i < suite.cases.size(); ++i) {
      const TestCase& tc = suite.cases[i];
      atomic_write_file(stdin_path, tc.stdin_bytes);
      auto argv = instantiate_command(run_template_, src_, bin_, stdin_path);
      ProcessResult pr = run_process(argv, stdin_path, stdout_path, stderr_path, dir_, limit);
      if (pr.timed_out) {
        outcome.verdict = RunVerdict::Timeout;
        outcome.diagnostic = "case " + std::to_string(i + 1) + " exceeded " + std::to_string(limit) + " ms";
        return outcome;
      }
      if (pr.signaled || pr.exit_code != 0) {
        outcome.verdict = RunVerdict::RuntimeError;
        outcome.diagnostic = "case " + std::to_string(i + 1) + " exit " + std::to_string(pr.exit_code) +
                             ": " + read_tail(stderr_path);
        return outcome;
      }
      std::string got = normalize_output(read_file(stdout_path));
      if (got != normalize_output(tc.expected_stdout_bytes)) {
        outcome.verdict = RunVerdict::WrongOutput;
        outcome.diagnostic = "case " + std::to_string(i + 1) + " output mismatch";
        return outcome;
      }
      total_ms += pr.wall_ms;
      digest_input += got;
      digest_input.push_back('\0');
    }
    outcome.verdict = RunVerdict::Correct;
    outcome.wall_time_ms = total_ms;
    outcome.stdout_digest = fnv1a64(digest_input);
    return outcome;
  }

 private:
  PreparedProgram() = default;
  std::string dir_;
  std::string src_;
  std::string bin_;
  std::string run_template_;
};

}  // namespace

RunOutcome run_once(const CodeSample& sample, const TestSuite& suite, const ExecutionConfig& config) {
  std::optional<RunOutcome> compile_failure;
  auto prog = PreparedProgram::prepare(sample, config, compile_failure);
  if (compile_failure) return *compile_failure;
  return prog->run(suite, config);
}

// ---------------------------------------------------------------------------
// PairTimer

struct PairTimer::ProgramCache {
  std::map<std::string, std::unique_ptr<PreparedProgram>> by_sample;
  std::map<std::string, RunOutcome> compile_failures;
};

PairTimer::PairTimer(ExecutionConfig config)
    : config_(std::move(config)), cache_(std::make_unique<ProgramCache>()) {}

PairTimer::~PairTimer() = default;

RunOutcome PairTimer::execute(const CodeSample& sample, const TestSuite& suite, int /*run_index*/) {
  auto fail_it = cache_->compile_failures.find(sample.sample_id);
  if (fail_it != cache_->compile_failures.end()) return fail_it->second;
  auto it = cache_->by_sample.find(sample.sample_id);
  if (it == cache_->by_sample.end()) {
    std::optional<RunOutcome> compile_failure;
    auto prog = PreparedProgram::prepare(sample, config_, compile_failure);
    if (compile_failure) {
      cache_->compile_failures[sample.sample_id] = *compile_failure;
      return *compile_failure;
    }
    it = cache_->by_sample.emplace(sample.sample_id, std::move(prog)).first;
  }
  return it->second->run(suite, config_);
}

LabelResult PairTimer::time_pair(const PairRecord& record) {
  auto fail = [&](const CodeSample& sample, const char* side, const RunOutcome& out) {
    LabelFailure f;
    f.pair_id = record.pair.pair_id;
    f.verdict = out.verdict;
    f.side = side;
    f.detail = sample.sample_id + ": " + out.diagnostic;
    return LabelResult(f);
  };

  std::array<double, 3> times_original{}, times_refined{};
  {
    // One lane for everything the clock sees, warm-ups included.
    std::lock_guard<std::mutex> lane(timing_lane());

    RunOutcome warm_o = execute(record.original, record.suite, 0);
    if (warm_o.verdict != RunVerdict::Correct) return fail(record.original, "original", warm_o);
    RunOutcome warm_r = execute(record.refined, record.suite, 0);
    if (warm_r.verdict != RunVerdict::Correct) return fail(record.refined, "refined", warm_r);

    for (int i = 1; i <= 3; ++i) {
      RunOutcome ro = execute(record.original, record.suite, i);
      if (ro.verdict != RunVerdict::Correct) return fail(record.original, "original", ro);
      times_original[i - 1] = *ro.wall_time_ms;
      RunOutcome rr = execute(record.refined, record.suite, i);
      if (rr.verdict != RunVerdict::Correct) return fail(record.refined, "refined", rr);
      times_refined[i - 1] = *rr.wall_time_ms;
    }
  }

  auto median3 = [](std::array<double, 3> t) {
    std::sort(t.begin(), t.end());
    return t[1];
  };

  PairLabel label;
  label.pair_id = record.pair.pair_id;
  label.times_original_ms = times_original;
  label.times_refined_ms = times_refined;
  label.gain_ratio = median3(times_original) / median3(times_refined);
  GainBreakdown b = classify_gain(label.gain_ratio);
  label.class3 = b.class3;
  label.winner = b.winner;
  label.easy = b.easy;

  int sign = 0;
  label.consistent = true;
  for (int i = 0; i < 3; ++i) {
    double d = times_original[i] - times_refined[i];
    int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) {
      label.consistent = false;
      break;
    }
    sign = s;
  }
  return label;
}

}  // namespace effjudge
