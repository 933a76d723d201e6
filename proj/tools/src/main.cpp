#include <iostream>
#include <string>
#include <vector>

#include "neucrowd_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return neucrowd::cli::run_subcommand(args, std::cout, std::cerr);
}
