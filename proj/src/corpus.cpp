#include "effjudge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "effjudge/serialize.hpp"
#include "effjudge/util.hpp"

namespace effjudge {

namespace {

void check_record(const PairRecord& rec) {
  const auto& p = rec.pair;
  if (rec.original.sample_id == rec.refined.sample_id)
    throw IntegrityError(p.pair_id + ": original and refined are the same sample");
  if (rec.original.problem_id != rec.refined.problem_id)
    throw IntegrityError(p.pair_id + ": samples belong to different problems");
  if (rec.original.text.empty() || rec.refined.text.empty())
    throw IntegrityError(p.pair_id + ": sample text is empty");
  Scenario expected = scenario_for(rec.original.source, rec.refined.source);
  if (expected != p.scenario)
    throw IntegrityError(p.pair_id + ": scenario " + to_string(p.scenario) +
                         " does not match sources (" + to_string(expected) + ")");
  if (rec.suite.cases.empty())
    throw IntegrityError(p.pair_id + ": test suite has no cases");
  if (rec.suite.time_limit_ms <= 0)
    throw IntegrityError(p.pair_id + ": time limit must be positive");
  if (rec.label && rec.label->gain_ratio <= 0.0)
    throw IntegrityError(p.pair_id + ": gain ratio must be positive");
}

struct SampleKey {
  std::string problem_id;
  SubjectLanguage lang;
  std::string source;
  std::string text;
  std::optional<std::string> parent;
  bool operator==(const SampleKey&) const = default;
};

SampleKey key_of(const CodeSample& s) {
  return {s.problem_id, s.subject_language, to_string(s.source), s.text, s.parent_id};
}

}  // namespace

void validate_records(const std::vector<PairRecord>& records) {
  std::set<std::string> pair_ids;
  std::map<std::string, SampleKey> samples;

  auto note_sample = [&](const CodeSample& s) {
    auto key = key_of(s);
    auto [it, inserted] = samples.emplace(s.sample_id, key);
    if (!inserted && !(it->second == key))
      throw IntegrityError("sample '" + s.sample_id + "' appears with conflicting contents");
  };

  for (const auto& rec : records) {
    check_record(rec);
    if (!pair_ids.insert(rec.pair.pair_id).second)
      throw IntegrityError("duplicate pair_id '" + rec.pair.pair_id + "'");
    note_sample(rec.original);
    note_sample(rec.refined);
  }

  for (const auto& [id, key] : samples) {
    if (!key.parent) continue;
    auto it = samples.find(*key.parent);
    if (it == samples.end())
      throw IntegrityError("sample '" + id + "' has dangling parent '" + *key.parent + "'");
    if (it->second.problem_id != key.problem_id || it->second.lang != key.lang)
      throw IntegrityError("sample '" + id + "' has parent from a different problem or language");
  }
}

std::vector<PairRecord> load_pairs(const std::string& path) {
  std::vector<PairRecord> records;
  auto lines = read_jsonl_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      records.push_back(record_from_json_line(lines[i]));
    } catch (const IntegrityError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  validate_records(records);
  return records;
}

void write_pairs(const std::vector<PairRecord>& records, const std::string& path) {
  std::string out;
  for (const auto& rec : records) {
    out += record_to_json_line(rec);
    out += '\n';
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Synthetic pair generation

namespace {

struct Blueprint {
  std::string fast_text;
  std::string slow_text;
  std::string stdin_data;
  std::string expected_stdout;
  double design_gain = 1.0;  // expected slow/fast time ratio, > 1
};

uint64_t pick_between(Rng& rng, uint64_t lo, uint64_t hi) {
  return lo + rng.below(hi - lo + 1);
}

std::string fib_decimal(uint64_t n) {
  unsigned long long a = 0, b = 1;
  for (uint64_t i = 0; i < n; ++i) {
    unsigned long long next = a + b;
    a = b;
    b = next;
  }
  return std::to_string(a);
}

Blueprint make_sum_closed(Rng& rng, SubjectLanguage lang) {
  Blueprint bp;
  if (lang == SubjectLanguage::Cpp) {
    uint64_t n = pick_between(rng, 200'000'000ull, 400'000'000ull);
    bp.fast_text =
        "#include <iostream>\n\nint main() {\n    long long n;\n    std::cin >> n;\n"
        "    std::cout << n * (n - 1) / 2 << \"\\n\";\n    return 0;\n}\n";
    bp.slow_text =
        "#include <iostream>\n\nint main() {\n    long long n;\n    std::cin >> n;\n"
        "    volatile long long s = 0;\n    for (long long i = 0; i < n; ++i) {\n"
        "        s += i;\n    }\n    std::cout << s << \"\\n\";\n    return 0;\n}\n";
    bp.stdin_data = std::to_string(n) + "\n";
    bp.expected_stdout = std::to_string(n * (n - 1) / 2) + "\n";
    bp.design_gain = (2.0 + static_cast<double>(n) * 4.0e-7) / 2.5;
  } else {
    uint64_t n = pick_between(rng, 1'200'000ull, 2'400'000ull);
    bp.fast_text = "n = int(input())\nprint(n * (n - 1) // 2)\n";
    bp.slow_text = "n = int(input())\ns = 0\nfor i in range(n):\n    s += i\nprint(s)\n";
    bp.stdin_data = std::to_string(n) + "\n";
    bp.expected_stdout = std::to_string(n * (n - 1) / 2) + "\n";
    bp.design_gain = (40.0 + static_cast<double>(n) * 9.0e-5) / 42.0;
  }
  return bp;
}

Blueprint make_even_sum(Rng& rng, SubjectLanguage lang) {
  Blueprint bp;
  if (lang == SubjectLanguage::Cpp) {
    uint64_t n = pick_between(rng, 200'000'000ull, 320'000'000ull);
    bp.fast_text =
        "#include <iostream>\n\nint main() {\n    long long n;\n    std::cin >> n;\n"
        "    volatile long long total = 0;\n    for (long long i = 2; i <= n; i += 2) {\n"
        "        total += i;\n    }\n    std::cout << total << \"\\n\";\n    return 0;\n}\n";
    bp.slow_text =
        "#include <iostream>\n\nint main() {\n    long long n;\n    std::cin >> n;\n"
        "    volatile long long total = 0;\n    for (long long i = 1; i <= n; ++i) {\n"
        "        if (i % 2 == 0) {\n            total += i;\n        }\n    }\n"
        "    std::cout << total << \"\\n\";\n    return 0;\n}\n";
    uint64_t k = n / 2;
    bp.stdin_data = std::to_string(n) + "\n";
    bp.expected_stdout = std::to_string(k * (k + 1)) + "\n";
    bp.design_gain = (2.0 + static_cast<double>(n) * 6.0e-7) / (2.0 + static_cast<double>(n) * 2.2e-7);
  } else {
    uint64_t n = pick_between(rng, 1'000'000ull, 2'000'000ull);
    bp.fast_text =
        "n = int(input())\ntotal = 0\nfor i in range(2, n + 1, 2):\n    total += i\nprint(total)\n";
    bp.slow_text =
        "n = int(input())\ntotal = 0\nfor i in range(1, n + 1):\n    if i % 2 == 0:\n"
        "        total += i\nprint(total)\n";
    uint64_t k = n / 2;
    bp.stdin_data = std::to_string(n) + "\n";
    bp.expected_stdout = std::to_string(k * (k + 1)) + "\n";
    bp.design_gain = (40.0 + static_cast<double>(n) * 6.5e-5) / (40.0 + static_cast<double>(n) * 2.5e-5);
  }
  return bp;
}

Blueprint make_fib_memo(Rng& rng, SubjectLanguage) {
  Blueprint bp;
  uint64_t n = pick_between(rng, 27, 30);
  bp.fast_text =
      "from functools import lru_cache\n\n\n@lru_cache(maxsize=None)\ndef fib(k):\n"
      "    if k < 2:\n        return k\n    return fib(k - 1) + fib(k - 2)\n\n\n"
      "n = int(input())\nprint(fib(n))\n";
  bp.slow_text =
      "def fib(k):\n    if k < 2:\n        return k\n    return fib(k - 1) + fib(k - 2)\n\n\n"
      "n = int(input())\nprint(fib(n))\n";
  bp.stdin_data = std::to_string(n) + "\n";
  bp.expected_stdout = fib_decimal(n) + "\n";
  bp.design_gain = 85.0 * std::pow(1.5, static_cast<double>(n) - 27.0) / 38.0;
  return bp;
}

Blueprint make_out_flush(Rng& rng, SubjectLanguage) {
  Blueprint bp;
  uint64_t n = pick_between(rng, 60'000ull, 100'000ull);
  bp.fast_text =
      "import sys\n\nn = int(input())\nparts = []\nfor i in range(n):\n"
      "    parts.append(str(i % 10))\nsys.stdout.write(\"\\n\".join(parts))\n";
  bp.slow_text =
      "import sys\n\nn = int(input())\nfor i in range(n):\n"
      "    sys.stdout.write(str(i % 10) + \"\\n\")\n    sys.stdout.flush()\n";
  bp.stdin_data = std::to_string(n) + "\n";
  std::string expected;
  expected.reserve(n * 2);
  for (uint64_t i = 0; i < n; ++i) {
    expected.push_back(static_cast<char>('0' + i % 10));
    expected.push_back('\n');
  }
  bp.expected_stdout = std::move(expected);
  bp.design_gain = (40.0 + static_cast<double>(n) * 1.5e-3) / (40.0 + static_cast<double>(n) * 1.5e-4);
  return bp;
}

Blueprint make_loop_extra(Rng& rng, SubjectLanguage) {
  Blueprint bp;
  uint64_t n = pick_between(rng, 900'000ull, 1'600'000ull);
  bp.fast_text = "n = int(input())\ns = 0\nfor i in range(n):\n    s += i\nprint(s)\n";
  bp.slow_text =
      "n = int(input())\ns = 0\nfor i in range(n):\n    t = i * i\n    s += i\nprint(s)\n";
  bp.stdin_data = std::to_string(n) + "\n";
  bp.expected_stdout = std::to_string(n * (n - 1) / 2) + "\n";
  bp.design_gain = (40.0 + static_cast<double>(n) * 1.45e-4) / (40.0 + static_cast<double>(n) * 0.95e-4);
  return bp;
}

// Two structurally identical programs whose second (dead) loop differs only
// in its bound; the designed gap stays inside the non-easy band. Both
// bounds have six digits so the texts are the same length.
Blueprint make_near_tie(Rng& rng, SubjectLanguage) {
  Blueprint bp;
  uint64_t n = pick_between(rng, 2'200'000ull, 3'000'000ull);
  uint64_t m1 = pick_between(rng, 110'000ull, 150'000ull);
  double u = rng.uniform(0.12, 0.16);
  uint64_t m2 = m1 + static_cast<uint64_t>(u * static_cast<double>(n));
  auto text_for = [](uint64_t m) {
    return "n = int(input())\ns = 0\nfor i in range(n):\n    s += i\nfor i in range(" +
           std::to_string(m) + "):\n    s += 0\nprint(s)\n";
  };
  bp.fast_text = text_for(m1);
  bp.slow_text = text_for(m2);
  bp.stdin_data = std::to_string(n) + "\n";
  bp.expected_stdout = std::to_string(n * (n - 1) / 2) + "\n";
  bp.design_gain = 1.0 + 0.63 * u;
  return bp;
}

using BlueprintFn = Blueprint (*)(Rng&, SubjectLanguage);

struct Family {
  const char* name;
  BlueprintFn make;
  bool has_cpp;
};

constexpr Family kFamilies[] = {
    {"sum-closed", make_sum_closed, true}, {"even-sum", make_even_sum, true},
    {"fib-memo", make_fib_memo, false},    {"out-flush", make_out_flush, false},
    {"loop-extra", make_loop_extra, false}, {"near-tie", make_near_tie, false},
};
constexpr size_t kFamilyCount = sizeof(kFamilies) / sizeof(kFamilies[0]);

std::string zero_padded(size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", n);
  return buf;
}

}  // namespace

const std::vector<std::string>& synth_family_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Family& f : kFamilies) v.push_back(f.name);
    return v;
  }();
  return names;
}

std::vector<PairRecord> synthesize_pairs(size_t count, uint64_t seed, const SynthOptions& options) {
  if (count < 1) throw DomainError("count must be at least 1");
  bool python_ok = false, cpp_ok = false;
  for (auto lang : options.languages) {
    python_ok |= lang == SubjectLanguage::Python;
    cpp_ok |= lang == SubjectLanguage::Cpp;
  }
  if (!python_ok) throw ConfigError("synthetic templates require python among the languages");

  std::vector<const Family*> active;
  if (options.families.empty()) {
    for (const Family& f : kFamilies) active.push_back(&f);
  } else {
    for (const std::string& name : options.families) {
      const Family* found = nullptr;
      for (const Family& f : kFamilies)
        if (name == f.name) found = &f;
      if (!found) throw ConfigError("unknown template family '" + name + "'");
      active.push_back(found);
    }
  }

  std::vector<PairRecord> records;
  records.reserve(count);
  std::vector<size_t> family_counts(active.size(), 0);

  for (size_t i = 0; i < count; ++i) {
    size_t fam_index = i % active.size();
    const Family& family = *active[fam_index];
    size_t problem_index = family_counts[fam_index]++ / 2;  // two pairs per problem
    std::string problem_id = std::string(family.name) + "-p" + std::to_string(problem_index);

    Rng prob_rng(fnv1a64(problem_id, seed));
    SubjectLanguage lang = SubjectLanguage::Python;
    if (family.has_cpp && cpp_ok && prob_rng.real01() < 0.3) lang = SubjectLanguage::Cpp;
    Blueprint bp = family.make(prob_rng, lang);

    Rng inst_rng(fnv1a64("synth-inst-" + std::to_string(i), seed));
    bool refined_is_fast = inst_rng.real01() < 0.5;
    double scen_draw = inst_rng.real01();
    Scenario scenario = scen_draw < 0.40 ? Scenario::HH : scen_draw < 0.75 ? Scenario::HM : Scenario::MM;
    const char* models[] = {"synthcoder-a", "synthcoder-b"};

    PairRecord rec;
    std::string pid = "synth-" + zero_padded(i);
    rec.pair.pair_id = pid;
    rec.pair.scenario = scenario;

    auto make_sample = [&](const char* suffix, const std::string& text, bool machine,
                           std::optional<std::string> parent) {
      CodeSample s;
      s.sample_id = pid + suffix;
      s.problem_id = problem_id;
      s.subject_language = lang;
      s.source = machine ? Source::machine(models[inst_rng.below(2)]) : Source::human();
      s.text = text;
      s.parent_id = std::move(parent);
      return s;
    };

    bool original_machine = scenario == Scenario::MM;
    bool refined_machine = scenario != Scenario::HH;
    const std::string& orig_text = refined_is_fast ? bp.slow_text : bp.fast_text;
    const std::string& ref_text = refined_is_fast ? bp.fast_text : bp.slow_text;
    rec.original = make_sample("-o", orig_text, original_machine, std::nullopt);
    rec.refined = make_sample("-r", ref_text, refined_machine, rec.original.sample_id);
    rec.pair.original_id = rec.original.sample_id;
    rec.pair.refined_id = rec.refined.sample_id;

    rec.suite.test_suite_id = pid + "-t";
    rec.suite.time_limit_ms = 8000;
    rec.suite.cases.push_back({bp.stdin_data, bp.expected_stdout});
    rec.pair.test_suite_id = rec.suite.test_suite_id;

    SynthOracle oracle;
    oracle.winner = refined_is_fast ? Winner::RefinedFaster : Winner::OriginalFaster;
    double nominal = refined_is_fast ? bp.design_gain : 1.0 / bp.design_gain;
    oracle.nominal_gain = std::round(nominal * 1000.0) / 1000.0;
    rec.oracle = oracle;

    records.push_back(std::move(rec));
  }

  validate_records(records);
  return records;
}

// ---------------------------------------------------------------------------
// Leakage-free splitting

SplitResult split(const std::vector<PairRecord>& records, const SplitSpec& spec) {
  spec.validate();

  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& rec : records) {
    if (seen.insert(rec.original.problem_id).second) problems.push_back(rec.original.problem_id);
  }

  const double fractions[3] = {spec.train_fraction, spec.val_fraction, spec.test_fraction};
  size_t nonzero = 0;
  for (double f : fractions)
    if (f > 0.0) ++nonzero;
  if (problems.size() < nonzero)
    throw DomainError("fewer distinct problem ids (" + std::to_string(problems.size()) +
                      ") than non-zero splits (" + std::to_string(nonzero) + ")");

  Rng rng(spec.seed);
  rng.shuffle(problems);

  size_t total = problems.size();
  size_t counts[3];
  double remainders[3];
  size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    double exact = fractions[k] * static_cast<double>(total);
    counts[k] = static_cast<size_t>(exact);
    remainders[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  while (assigned < total) {  // largest remainder, ties resolved train > val > test
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (remainders[k] > remainders[best]) best = k;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  for (int k = 0; k < 3; ++k) {
    if (fractions[k] > 0.0 && counts[k] == 0) {
      int donor = 0;
      for (int d = 1; d < 3; ++d)
        if (counts[d] > counts[donor]) donor = d;
      --counts[donor];
      ++counts[k];
    }
  }

  std::map<std::string, int> assignment;
  size_t idx = 0;
  for (int k = 0; k < 3; ++k)
    for (size_t c = 0; c < counts[k]; ++c) assignment[problems[idx++]] = k;

  SplitResult result;
  for (const auto& rec : records) {
    switch (assignment.at(rec.original.problem_id)) {
      case 0: result.train.push_back(rec); break;
      case 1: result.val.push_back(rec); break;
      default: result.test.push_back(rec); break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {
std::string normalize_ws(const std::string& text) {
  std::string out;
  bool in_space = true;  // swallows leading whitespace
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}
}  // namespace

DedupeResult dedupe_pairs(std::vector<PairRecord> records) {
  DedupeResult result;
  for (auto& rec : records) {
    if (normalize_ws(rec.original.text) == normalize_ws(rec.refined.text)) {
      ++result.dropped;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace effjudge
