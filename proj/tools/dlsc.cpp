#include <iostream>
#include <string>
#include <vector>

#include "dlsc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dlsc::cli::run(args, std::cout, std::cerr);
}
