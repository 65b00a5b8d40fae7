#include <iostream>

#include "phrev/cli.hpp"

int main(int argc, char** argv) {
  return phrev::cli::main_entry(argc, argv, std::cout, std::cerr);
}
