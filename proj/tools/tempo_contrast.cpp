#include <iostream>
#include <string>
#include <vector>

#include "tempo/cli/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return tempo::cli::run_command(args, std::cout, std::cerr);
}
