#include <iostream>

#include "gold/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gold::run_cli(args, std::cout, std::cerr);
}
