#include <iostream>
#include <string>
#include <vector>

#include "canonflow/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return canonflow::run_cli(args, std::cout, std::cerr);
}
