#ifndef NNGRAMS_CLI_HPP
#define NNGRAMS_CLI_HPP

namespace nngrams {

// Command-line front end. Exit codes: 0 success, 1 validation error,
// 2 data error.
int run_cli(int argc, const char* const* argv);

}  // namespace nngrams

#endif
