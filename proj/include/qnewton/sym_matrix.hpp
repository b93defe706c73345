#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qnewton {

/// Dense symmetric n x n matrix in row-major storage.
///
/// Symmetry is exact: the constructor rejects inputs whose asymmetry exceeds
/// 1e-12 relative to the largest entry and then mirrors the averaged values,
/// and set() always writes both (i, j) and (j, i).
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t n);
  SymMatrix(std::size_t n, std::vector<double> entries);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Builds (M + M^T) / 2 from an arbitrary square row-major matrix.
  static SymMatrix symmetrized(std::size_t n, std::span<const double> entries);

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double value) noexcept {
    data_[i * n_ + j] = value;
    data_[j * n_ + i] = value;
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * n_, n_);
  }

  std::vector<double> multiply(std::span<const double> x) const;
  double trace() const noexcept;
  double max_abs() const noexcept;
  double frobenius_norm() const noexcept;

  bool operator==(const SymMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<double> data_;
};

}  // namespace qnewton
