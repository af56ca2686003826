#include <iostream>
#include <string>
#include <vector>

#include "streamint/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return streamint::run_cli(args, std::cout, std::cerr);
}
