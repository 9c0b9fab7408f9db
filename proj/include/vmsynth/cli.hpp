#pragma once

#include <iosfwd>

namespace vmsynth::cli {

// Entry point of the `vmsynth` tool. Subcommands: synth, validate,
// render-preview, eval, keypoints, make-demo. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace vmsynth::cli
