#include <iostream>

#include "handopt/cli.hpp"

int main(int argc, char** argv) {
  return handopt::cli::run(argc, argv, std::cout, std::cerr);
}
