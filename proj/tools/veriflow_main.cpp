#include "veriflow/cli.h"

#include <iostream>

int main(int argc, char **argv) {
  return veriflow::cli::run_cli(argc, argv, std::cout, std::cerr);
}
