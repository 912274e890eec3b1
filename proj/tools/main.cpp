#include <iostream>
#include <string>
#include <vector>

#include "dualre/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dualre::run_cli(args, std::cout, std::cerr);
}
