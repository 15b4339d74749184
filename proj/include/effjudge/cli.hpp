#pragma once

namespace effjudge {

// Entry point of the effjudge binary. Returns 0 on success, 1 on a stage
// failure (single machine-parsable error line on stderr), 2 on usage
// errors.
int run_cli(int argc, const char* const* argv);

}  // namespace effjudge
