#pragma once

#include <string>
#include <vector>

#include "effjudge/types.hpp"

namespace effjudge {

// Canonical JSON for one pair record / verdict, no trailing newline.
// Field order is fixed so that load followed by write is byte-stable.
std::string record_to_json_line(const PairRecord& rec);
PairRecord record_from_json_line(const std::string& line);

std::string verdict_to_json_line(const JudgeVerdict& v);
JudgeVerdict verdict_from_json_line(const std::string& line);

// Pair record with the verdict fields appended under "verdict"; the judge
// stage writes this shape so downstream files stay self-contained.
std::string record_with_verdict_to_json_line(const PairRecord& rec, const JudgeVerdict& v);

// Newline-delimited record files. Loaders prefix errors with the 1-based
// line number. Writers end the file with a final newline and replace the
// target atomically. load_verdicts accepts bare verdict lines as well as
// pair records carrying a "verdict" object.
std::vector<JudgeVerdict> load_verdicts(const std::string& path);
void write_verdicts(const std::vector<JudgeVerdict>& verdicts, const std::string& path);
void write_records_with_verdicts(const std::vector<PairRecord>& records,
                                 const std::vector<JudgeVerdict>& verdicts,
                                 const std::string& path);

std::vector<std::string> read_jsonl_lines(const std::string& path);

}  // namespace effjudge
