#include <iostream>

#include "pipestab/cli.hpp"

int main(int argc, char** argv) {
  return pipestab::run_cli(argc, argv, std::cout, std::cerr);
}
