#include "qnewton/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "qnewton/error.hpp"
#include "qnewton/kernels.hpp"

namespace qnewton {

std::vector<double> solve_classical(const SymMatrix& a, std::span<const double> b) {
  const std::size_t n = a.n();
  if (b.size() != n) throw InvalidArgument("solve_classical: rhs length does not match matrix");
  std::vector<double> lu(a.data().begin(), a.data().end());
  std::vector<std::size_t> pivots(n);
  const auto res = kernels::omp::lu_factor(lu, n, pivots, kPivotTolerance);
  if (!res.ok) {
    throw SingularMatrix("solve_classical: pivot underflow at column " +
                         std::to_string(res.failed_column));
  }
  std::vector<double> x(b.begin(), b.end());
  kernels::lu_solve(lu, n, pivots, x);
  return x;
}

Spectrum eig_sym(const SymMatrix& m, int max_sweeps) {
  const std::size_t n = m.n();
  std::vector<double> a(m.data().begin(), m.data().end());
  const double tol = 1e-12 * m.frobenius_norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
  };

  bool converged = false;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
    if (off_norm() <= tol) {
      converged = true;
      break;
    }
    if (sweep == max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t;
        if (std::fabs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
      }
    }
  }
  if (!converged) {
    throw NonConvergence("eig_sym: no convergence after " + std::to_string(max_sweeps) + " sweeps");
  }

  Spectrum spec;
  spec.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) spec.eigenvalues[i] = a[i * n + i];
  std::sort(spec.eigenvalues.begin(), spec.eigenvalues.end(), std::greater<>());
  return spec;
}

double exact_condition_number(const SymMatrix& a) {
  const Spectrum s = eig_sym(a);
  if (!(s.smallest() > 0.0)) {
    throw NotPositiveDefinite("exact_condition_number: smallest eigenvalue is not positive");
  }
  return s.largest() / s.smallest();
}

double logdet_spd(const SymMatrix& a) {
  const std::size_t n = a.n();
  std::vector<double> l(a.data().begin(), a.data().end());
  const auto res = kernels::omp::cholesky(l, n);
  if (!res.ok) {
    throw NotPositiveDefinite("logdet_spd: non-positive Cholesky pivot at column " +
                              std::to_string(res.failed_column));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += 2.0 * std::log(l[i * n + i]);
  return sum;
}

bool is_positive_definite(const SymMatrix& a, double shift) {
  const std::size_t n = a.n();
  std::vector<double> l(a.data().begin(), a.data().end());
  if (shift != 0.0)
    for (std::size_t i = 0; i < n; ++i) l[i * n + i] += shift;
  return kernels::omp::cholesky(l, n).ok;
}

std::size_t p_sparsity_count(std::span<const double> row, double percent) {
  std::vector<double> mags(row.size());
  std::transform(row.begin(), row.end(), mags.begin(), [](double v) { return std::fabs(v); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double total = 0.0;
  for (double v : mags) total += v;
  if (total == 0.0) return 0;
  const double target = percent / 100.0 * total;
  double prefix = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    prefix += mags[k];
    if (prefix >= target) return k + 1;
  }
  return mags.size();
}

double density(const SymMatrix& a, double tol) {
  std::size_t nnz = 0;
  for (double v : a.data())
    if (std::fabs(v) > tol) ++nnz;
  return static_cast<double>(nnz) / static_cast<double>(a.data().size());
}

double density(const SymMatrix& a) { return density(a, 1e-10 * a.max_abs()); }

SparsityReport sparsity_report(const SymMatrix& a, double tol) {
  if (tol < 0.0) throw InvalidArgument("sparsity_report: tol must be >= 0");
  SparsityReport r;
  r.density = density(a, tol);
  for (int p : kSparsityLevels) {
    auto& counts = r.p_sparsity[p];
    counts.resize(a.n());
    for (std::size_t i = 0; i < a.n(); ++i) counts[i] = p_sparsity_count(a.row(i), p);
  }
  return r;
}

SparsityReport sparsity_report(const SymMatrix& a) { return sparsity_report(a, 1e-10 * a.max_abs()); }

}  // namespace qnewton
