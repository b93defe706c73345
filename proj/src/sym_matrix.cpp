#include "qnewton/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnewton/error.hpp"
#include "qnewton/kernels.hpp"

namespace qnewton {

namespace {
constexpr double kSymmetryTol = 1e-12;
}

SymMatrix::SymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {
  if (n == 0) throw InvalidArgument("SymMatrix: dimension must be >= 1");
}

SymMatrix::SymMatrix(std::size_t n, std::vector<double> entries) : n_(n), data_(std::move(entries)) {
  if (n == 0) throw InvalidArgument("SymMatrix: dimension must be >= 1");
  if (data_.size() != n * n) {
    throw InvalidArgument("SymMatrix: expected " + std::to_string(n * n) + " entries, got " +
                          std::to_string(data_.size()));
  }
  const double scale = max_abs();
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double a = data_[i * n_ + j];
      const double b = data_[j * n_ + i];
      if (std::fabs(a - b) > kSymmetryTol * scale) {
        throw InvalidArgument("SymMatrix: entries (" + std::to_string(i) + "," + std::to_string(j) +
                              ") and its mirror differ beyond tolerance");
      }
      if (a != b) set(i, j, 0.5 * (a + b));
    }
  }
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.data_[i * m.n_ + i] = diag[i];
  return m;
}

SymMatrix SymMatrix::symmetrized(std::size_t n, std::span<const double> entries) {
  if (entries.size() != n * n) throw InvalidArgument("SymMatrix::symmetrized: size mismatch");
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.data_[i * n + i] = entries[i * n + i];
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, 0.5 * (entries[i * n + j] + entries[j * n + i]));
  }
  return m;
}

std::vector<double> SymMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) throw InvalidArgument("SymMatrix::multiply: length mismatch");
  std::vector<double> y(n_);
  kernels::omp::matvec(data_, n_, x, y);
  return y;
}

double SymMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += data_[i * n_ + i];
  return t;
}

double SymMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

double SymMatrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

}  // namespace qnewton
