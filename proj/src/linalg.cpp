#include "kvdelay/linalg.hpp"

#include <cstdlib>
#include <string>
#include <strings.h>

#include <dlfcn.h>
#include <unistd.h>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "kvdelay/errors.hpp"

namespace kvdelay::linalg {

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ShapeError("eigenvalues of a non-square matrix");
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return {};
  Eigen::MatrixXd work = a;
  Eigen::VectorXd wr(n), wi(n);
  double dummy = 0.0;
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(), wi.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw EigenSolverError("dgeev failed with info=" + std::to_string(info));
  Eigen::VectorXcd out(n);
  for (lapack_int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
  return out;
}

Eigen::VectorXd singular_values(Eigen::MatrixXcd a) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  Eigen::VectorXd s(std::min(m, n));
  if (s.size() == 0) return s;
  std::complex<double> dummy;
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, a.data(), m, s.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw EigenSolverError("zgesdd failed with info=" + std::to_string(info));
  return s;
}

void pin_blas_kernels(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE")) return;
  using CoreName = char* (*)();
  const auto corename = reinterpret_cast<CoreName>(dlsym(RTLD_DEFAULT, "openblas_get_corename"));
  if (!corename) return;
  const char* core = corename();
  if (!core || strcasecmp(core, "cooperlake") != 0) return;
  if (setenv("OPENBLAS_CORETYPE", "SkylakeX", 1) != 0) return;
  execv("/proc/self/exe", argv);  // returns only on failure; carry on with the loaded kernels
}

}  // namespace kvdelay::linalg
