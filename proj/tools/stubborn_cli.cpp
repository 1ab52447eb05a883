#include <iostream>
#include <string>
#include <vector>

#include "stubborn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return stubborn::run_cli(args, std::cout, std::cerr);
}
