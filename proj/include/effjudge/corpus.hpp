#pragma once

#include <string>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

// Loads a newline-delimited pair dataset. Malformed lines raise ParseError
// with the 1-based line number; violated invariants (mismatched problem
// ids, impossible scenarios, dangling parent references, ...) raise
// IntegrityError.
std::vector<PairRecord> load_pairs(const std::string& path);

// Inverse of load_pairs with canonical field ordering, atomic replace.
void write_pairs(const std::vector<PairRecord>& records, const std::string& path);

// Validation shared by load_pairs and synthesize_pairs; exposed so callers
// building records in memory can check them the same way.
void validate_records(const std::vector<PairRecord>& records);

struct SynthOptions {
  std::vector<SubjectLanguage> languages = {SubjectLanguage::Python, SubjectLanguage::Cpp};
  // Template families to draw from; empty means all. Unknown names raise
  // ConfigError. synth_family_names() lists the valid ones.
  std::vector<std::string> families;
};

const std::vector<std::string>& synth_family_names();

// Deterministically generates pairs from templates where one side is
// algorithmically faster. Each record carries an oracle block with the
// designed winner and a nominal gain ratio; judges must never read it.
std::vector<PairRecord> synthesize_pairs(size_t count, uint64_t seed,
                                         const SynthOptions& options = {});

struct SplitResult {
  std::vector<PairRecord> train;
  std::vector<PairRecord> val;
  std::vector<PairRecord> test;
};

// Splits with all pairs of one problem_id kept in a single split, so a
// judge cannot meet a test problem's fast solution during training.
SplitResult split(const std::vector<PairRecord>& records, const SplitSpec& spec);

struct DedupeResult {
  std::vector<PairRecord> records;
  size_t dropped = 0;
};

// Drops pairs whose two texts are identical after whitespace
// normalization (no-op refinements carry no efficiency signal).
DedupeResult dedupe_pairs(std::vector<PairRecord> records);

}  // namespace effjudge
