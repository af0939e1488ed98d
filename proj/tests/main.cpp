#include <gtest/gtest.h>

#include "kvdelay/linalg.hpp"

int main(int argc, char** argv) {
  kvdelay::linalg::pin_blas_kernels(argv);
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
