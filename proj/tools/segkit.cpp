#include <iostream>
#include <string>
#include <vector>

#include "segkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return segkit::cli::run(args, std::cout, std::cerr);
}
