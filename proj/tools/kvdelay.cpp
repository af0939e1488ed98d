#include <iostream>

#include "kvdelay/cli.hpp"
#include "kvdelay/linalg.hpp"

int main(int argc, char** argv) {
  kvdelay::linalg::pin_blas_kernels(argv);
  return kvdelay::run_command(argc, argv, std::cout, std::cerr);
}
