#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace perfcnn {

// Runs the perfcnn command line against `args` (program name excluded).
// Subcommands: mask, eval, search, train, bench; `perfcnn <cmd> --help`
// documents each. Networks are float-valued; one global --seed fans out to
// every stochastic component through derive_seed(seed, component), so adding
// a component never perturbs the streams of the existing ones.
//
// Returns the process exit code: 0 on success, 2 when the arguments or the
// referenced files are invalid, 1 on an internal error. Normal output goes
// to `out`, diagnostics to `err` (both default to the process streams; tests
// substitute string streams).
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace perfcnn
