#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "qnewton/sym_matrix.hpp"

namespace qnewton {

/// Eigenvalues of a symmetric matrix, sorted non-increasing.
struct Spectrum {
  std::vector<double> eigenvalues;

  double largest() const { return eigenvalues.front(); }
  double smallest() const { return eigenvalues.back(); }
};

/// Percent levels reported by sparsity_report().
inline constexpr int kSparsityLevels[] = {50, 75, 90, 95};

struct SparsityReport {
  /// Fraction of entries with |value| > tol.
  double density = 0.0;
  /// p -> per-row minimum count of largest-magnitude entries whose absolute
  /// values sum to at least p% of the row's absolute sum (0 for zero rows).
  std::map<int, std::vector<std::size_t>> p_sparsity;
};

inline constexpr double kPivotTolerance = 1e-12;

/// LU with partial pivoting. Throws SingularMatrix when |pivot| <= 1e-12.
std::vector<double> solve_classical(const SymMatrix& a, std::span<const double> b);

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||A||_F. Throws NonConvergence after `max_sweeps` sweeps.
Spectrum eig_sym(const SymMatrix& a, int max_sweeps = 100);

/// lambda_max / lambda_min; throws NotPositiveDefinite when lambda_min <= 0.
double exact_condition_number(const SymMatrix& a);

/// log det(A) from a Cholesky factorization. Throws NotPositiveDefinite.
double logdet_spd(const SymMatrix& a);

/// True when Cholesky of A + shift * I succeeds.
bool is_positive_definite(const SymMatrix& a, double shift = 0.0);

/// Per-row p%-sparsity count for a single row of values (any sign).
std::size_t p_sparsity_count(std::span<const double> row, double percent);

SparsityReport sparsity_report(const SymMatrix& a, double tol);
/// Uses tol = 1e-10 * max|A_ij|.
SparsityReport sparsity_report(const SymMatrix& a);

/// Density alone; same definition as SparsityReport::density.
double density(const SymMatrix& a, double tol);
double density(const SymMatrix& a);

}  // namespace qnewton
