#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "qnewton/sym_matrix.hpp"

namespace qnewton {

struct PruneConfig {
  /// Fraction of off-diagonal entry pairs to zero, in [0, 1).
  double target_sparsity = 0.0;
  /// Re-add pruned pairs until the result passes Cholesky.
  bool pd_check = true;
  /// The positive-definiteness test is run on A + pd_shift * I. Set this to
  /// the regularization that will be applied after pruning, so that the
  /// matrix actually solved is the one guaranteed to factorize.
  double pd_shift = 0.0;

  bool operator==(const PruneConfig&) const = default;
};

struct ConditioningReport {
  double kappa_bound = 1.0;
  double log_kappa_bound = 0.0;
  std::optional<double> kappa_exact;
  double achieved_sparsity = 0.0;
  std::size_t retained_for_pd = 0;
  double epsilon_reg = 0.0;
};

/// Merikoski upper bound on the 2-norm condition number of an SPD matrix:
///   kappa <= (1 + x) / (1 - x),  x = sqrt(1 - (n / tr A)^n det A).
/// The product is formed in the log domain. The inner value is clamped to
/// [0, 1] and x to <= 1 - 1e-15; a clamped x yields +infinity, which callers
/// treat as "ill-conditioned". Throws NotPositiveDefinite.
double merikoski_bound(const SymMatrix& a);

/// Natural log of the same bound without the clamp:
///   log bound = 2 log(1 + x) - s,  s = n (log n - log tr A) + log det A,
/// which is exact for any s <= 0 and stays finite where the bound itself
/// overflows a double (large n).
double merikoski_log_bound(const SymMatrix& a);

struct MerikoskiEstimate {
  double bound = 1.0;
  double log_bound = 0.0;
};

/// Both of the above from a single Cholesky factorization.
MerikoskiEstimate merikoski_estimate(const SymMatrix& a);

/// H + epsilon * I.
SymMatrix regularize(const SymMatrix& a, double epsilon_reg);

/// Zeroes the floor(target * n(n-1)/2) smallest-magnitude off-diagonal pairs
/// (ties broken by (i, j) lexicographically); the diagonal is never pruned.
/// With pd_check, pruned pairs are re-added largest-first until Cholesky of
/// the result (plus pd_shift) succeeds. The first 8 re-add counts are tried
/// one by one, then the count is found by galloping and bisection. The
/// report carries achieved_sparsity, retained_for_pd and epsilon_reg
/// (= pd_shift); callers estimate kappa on the matrix they actually solve.
/// Throws NotPositiveDefinite when the unpruned matrix fails as well.
std::pair<SymMatrix, ConditioningReport> prune_symmetric(const SymMatrix& a, const PruneConfig& cfg);

}  // namespace qnewton
