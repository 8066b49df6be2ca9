#pragma once

namespace plfm {

// Entry point behind the plfm binary; returns the process exit status.
// Subcommands: generate, fit, impute, evaluate.
int cli_main(int argc, const char* const* argv);

}  // namespace plfm
