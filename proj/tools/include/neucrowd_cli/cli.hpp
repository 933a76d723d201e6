#ifndef NEUCROWD_CLI_CLI_HPP_
#define NEUCROWD_CLI_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace neucrowd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name. Help and usage text go to `out`;
// JSONL logs and the one-line JSON error go to `err`.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neucrowd::cli

#endif  // NEUCROWD_CLI_CLI_HPP_
