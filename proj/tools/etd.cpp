#include <iostream>

#include "etd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return etd::run_cli(args, std::cout, std::cerr);
}
