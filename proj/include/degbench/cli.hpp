#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace degbench::cli {

// Exit codes: 0 success, 1 runtime failure (JSON diagnostic on `err`),
// 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace degbench::cli
