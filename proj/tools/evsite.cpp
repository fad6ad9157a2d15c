#include <iostream>

#include "evsite/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return evsite::cli::run(args, std::cout, std::cerr);
}
