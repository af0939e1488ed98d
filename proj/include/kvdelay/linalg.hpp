#pragma once

#include <Eigen/Dense>

namespace kvdelay::linalg {

// All eigenvalues of a real square matrix (LAPACK dgeev, values only).
Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a);

// Singular values in decreasing order (LAPACK zgesdd, values only). Consumes its input.
Eigen::VectorXd singular_values(Eigen::MatrixXcd a);

// OpenBLAS 0.3.20 picks its Cooperlake kernels on AVX512-BF16 hosts, and there the
// nonsymmetric QR in dgeev returns wrong eigenvalues beyond n ~ 75. OpenBLAS reads
// OPENBLAS_CORETYPE only at load time, so when that core is active and the variable
// is unset this re-executes the program with OPENBLAS_CORETYPE=SkylakeX. Returns
// normally in every other case. Call first thing in main.
void pin_blas_kernels(char** argv);

}  // namespace kvdelay::linalg
