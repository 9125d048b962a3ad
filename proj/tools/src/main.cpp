#include <iostream>

#include "autoclean_tools/cli.hpp"

int main(int argc, char** argv) {
  return autoclean::tools::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
