#include <iostream>

#include "wpd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wpd::run_cli(args, std::cout, std::cerr);
}
