#include <iostream>
#include <string>
#include <vector>

#include "qcal_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qcal::cli::run(args, std::cout, std::cerr);
}
