#pragma once

// Dense kernels behind the linear-algebra layer. Every kernel has a serial
// reference in kernels::serial and an OpenMP version in kernels::omp. The
// OpenMP versions parallelize only over independent rows/columns and keep
// the per-element operation order of the reference, so both produce
// bitwise-identical results for any thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace qnewton::kernels {

struct LuResult {
  bool ok = true;
  std::size_t failed_column = 0;
};

struct CholeskyResult {
  bool ok = true;
  std::size_t failed_column = 0;
};

// lu_factor: row-major n x n LU with partial pivoting, in place. pivots[k]
// is the row swapped into position k. Fails when |pivot| <= pivot_tol.
//
// cholesky: lower factor written into the lower triangle of `a`, in place.
// Fails on the first non-positive pivot; the upper triangle is untouched.

namespace serial {
void matvec(std::span<const double> a, std::size_t n, std::span<const double> x,
            std::span<double> y);
LuResult lu_factor(std::span<double> a, std::size_t n, std::span<std::size_t> pivots,
                   double pivot_tol);
CholeskyResult cholesky(std::span<double> a, std::size_t n);
}  // namespace serial

namespace omp {
void matvec(std::span<const double> a, std::size_t n, std::span<const double> x,
            std::span<double> y);
LuResult lu_factor(std::span<double> a, std::size_t n, std::span<std::size_t> pivots,
                   double pivot_tol);
CholeskyResult cholesky(std::span<double> a, std::size_t n);
}  // namespace omp

/// Solves with the packed LU factors produced by lu_factor.
void lu_solve(std::span<const double> lu, std::size_t n, std::span<const std::size_t> pivots,
              std::span<double> rhs);

}  // namespace qnewton::kernels
