#pragma once

namespace lfdeblur {

// Parses argv and runs one subcommand (synth, train, infer, eval, slice,
// info). Returns a process exit code; toolkit errors propagate as Error.
int run_cli(int argc, char** argv);

}  // namespace lfdeblur
