#include <iostream>

#include "collabperf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return collabperf::run_cli(args, std::cout, std::cerr);
}
