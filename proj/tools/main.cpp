#include <iostream>

#include "hexastack/harness/cli.hpp"

int main(int argc, char** argv) {
  return hexastack::harness::cli_dispatch(argc, argv, std::cout, std::cerr);
}
