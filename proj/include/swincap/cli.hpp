#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace swincap {

/// Dispatches one command (gen-corpus, train, caption, eval, flops) given
/// argv without the program name. Returns the process exit code: 0 ok,
/// 1 I/O or data problem, 2 bad flags or config, 3 numeric failure.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace swincap
