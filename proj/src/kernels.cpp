#include "qnewton/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

namespace qnewton::kernels {

namespace {

inline double dot(const double* a, const double* b, std::size_t len) {
  double s = 0.0;
  for (std::size_t k = 0; k < len; ++k) s += a[k] * b[k];
  return s;
}

// Returns the row index of the largest |a(i, k)| for i >= k; first wins on ties.
std::size_t pivot_row(std::span<const double> a, std::size_t n, std::size_t k) {
  std::size_t best = k;
  double best_abs = std::fabs(a[k * n + k]);
  for (std::size_t i = k + 1; i < n; ++i) {
    const double v = std::fabs(a[i * n + k]);
    if (v > best_abs) {
      best_abs = v;
      best = i;
    }
  }
  return best;
}

void swap_rows(std::span<double> a, std::size_t n, std::size_t r1, std::size_t r2) {
  if (r1 == r2) return;
  for (std::size_t j = 0; j < n; ++j) std::swap(a[r1 * n + j], a[r2 * n + j]);
}

}  // namespace

namespace serial {

void matvec(std::span<const double> a, std::size_t n, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = dot(&a[i * n], x.data(), n);
}

LuResult lu_factor(std::span<double> a, std::size_t n, std::span<std::size_t> pivots,
                   double pivot_tol) {
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = pivot_row(a, n, k);
    pivots[k] = p;
    swap_rows(a, n, k, p);
    const double pivot = a[k * n + k];
    if (!(std::fabs(pivot) > pivot_tol)) return {false, k};
    const double* row_k = &a[k * n];
    for (std::size_t i = k + 1; i < n; ++i) {
      double* row_i = &a[i * n];
      const double l = row_i[k] / pivot;
      row_i[k] = l;
      for (std::size_t j = k + 1; j < n; ++j) row_i[j] -= l * row_k[j];
    }
  }
  return {};
}

CholeskyResult cholesky(std::span<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double* row_j = &a[j * n];
    const double d = row_j[j] - dot(row_j, row_j, j);
    if (!(d > 0.0)) return {false, j};
    const double ljj = std::sqrt(d);
    row_j[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* row_i = &a[i * n];
      row_i[j] = (row_i[j] - dot(row_i, row_j, j)) / ljj;
    }
  }
  return {};
}

}  // namespace serial

namespace omp {

void matvec(std::span<const double> a, std::size_t n, std::span<const double> x,
            std::span<double> y) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    y[r] = dot(&a[r * n], x.data(), n);
  }
}

LuResult lu_factor(std::span<double> a, std::size_t n, std::span<std::size_t> pivots,
                   double pivot_tol) {
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = pivot_row(a, n, k);
    pivots[k] = p;
    swap_rows(a, n, k, p);
    const double pivot = a[k * n + k];
    if (!(std::fabs(pivot) > pivot_tol)) return {false, k};
    const double* row_k = &a[k * n];
    const auto first = static_cast<std::int64_t>(k + 1);
    const auto last = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n - k > 64)
    for (std::int64_t ii = first; ii < last; ++ii) {
      double* row_i = &a[static_cast<std::size_t>(ii) * n];
      const double l = row_i[k] / pivot;
      row_i[k] = l;
      for (std::size_t j = k + 1; j < n; ++j) row_i[j] -= l * row_k[j];
    }
  }
  return {};
}

CholeskyResult cholesky(std::span<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double* row_j = &a[j * n];
    const double d = row_j[j] - dot(row_j, row_j, j);
    if (!(d > 0.0)) return {false, j};
    const double ljj = std::sqrt(d);
    row_j[j] = ljj;
    const auto first = static_cast<std::int64_t>(j + 1);
    const auto last = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n - j > 64)
    for (std::int64_t ii = first; ii < last; ++ii) {
      double* row_i = &a[static_cast<std::size_t>(ii) * n];
      row_i[j] = (row_i[j] - dot(row_i, row_j, j)) / ljj;
    }
  }
  return {};
}

}  // namespace omp

void lu_solve(std::span<const double> lu, std::size_t n, std::span<const std::size_t> pivots,
              std::span<double> rhs) {
  for (std::size_t k = 0; k < n; ++k) std::swap(rhs[k], rhs[pivots[k]]);
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= dot(&lu[i * n], rhs.data(), i);
  for (std::size_t i = n; i-- > 0;) {
    const double* row = &lu[i * n];
    rhs[i] = (rhs[i] - dot(row + i + 1, rhs.data() + i + 1, n - i - 1)) / row[i];
  }
}

}  // namespace qnewton::kernels
