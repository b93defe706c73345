#include "qnewton/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include "qnewton/error.hpp"
#include "qnewton/linalg.hpp"

namespace qnewton {

namespace {

constexpr double kMaxX = 1.0 - 1e-15;
// Re-add counts tested one by one before switching to galloping search.
constexpr std::size_t kLinearRepairSteps = 8;

// s = log((n / tr)^n det A)
double merikoski_log_inner(const SymMatrix& a) {
  const double tr = a.trace();
  if (!(tr > 0.0)) throw NotPositiveDefinite("merikoski_bound: trace must be positive");
  const double n = static_cast<double>(a.n());
  return n * (std::log(n) - std::log(tr)) + logdet_spd(a);
}

struct Pair {
  double magnitude;
  std::size_t i;
  std::size_t j;
};

double bound_from_log_inner(double s) {
  const double inner = std::clamp(std::exp(s), 0.0, 1.0);
  const double x = std::min(std::sqrt(1.0 - inner), kMaxX);
  if (x >= kMaxX) return std::numeric_limits<double>::infinity();
  return (1.0 + x) / (1.0 - x);
}

double log_bound_from_log_inner(double s) {
  // AM-GM gives s <= 0; positive values are round-off.
  s = std::min(s, 0.0);
  const double x = std::sqrt(-std::expm1(s));
  return 2.0 * std::log1p(x) - s;
}

}  // namespace

double merikoski_bound(const SymMatrix& a) { return bound_from_log_inner(merikoski_log_inner(a)); }

double merikoski_log_bound(const SymMatrix& a) { return log_bound_from_log_inner(merikoski_log_inner(a)); }

MerikoskiEstimate merikoski_estimate(const SymMatrix& a) {
  const double s = merikoski_log_inner(a);
  return {bound_from_log_inner(s), log_bound_from_log_inner(s)};
}

SymMatrix regularize(const SymMatrix& a, double epsilon_reg) {
  if (!(epsilon_reg >= 0.0)) throw InvalidArgument("regularize: epsilon_reg must be >= 0");
  SymMatrix out = a;
  if (epsilon_reg == 0.0) return out;
  for (std::size_t i = 0; i < a.n(); ++i) out.set(i, i, a(i, i) + epsilon_reg);
  return out;
}

std::pair<SymMatrix, ConditioningReport> prune_symmetric(const SymMatrix& a, const PruneConfig& cfg) {
  if (!(cfg.target_sparsity >= 0.0 && cfg.target_sparsity < 1.0)) {
    throw InvalidArgument("prune_symmetric: target_sparsity must be in [0, 1)");
  }
  const std::size_t n = a.n();
  const std::size_t total_pairs = n * (n - 1) / 2;
  const auto k = static_cast<std::size_t>(std::floor(cfg.target_sparsity * static_cast<double>(total_pairs)));

  std::vector<Pair> pairs;
  pairs.reserve(total_pairs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({std::fabs(a(i, j)), i, j});
  auto by_magnitude = [](const Pair& x, const Pair& y) {
    return std::tie(x.magnitude, x.i, x.j) < std::tie(y.magnitude, y.i, y.j);
  };
  if (k < pairs.size()) std::nth_element(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end(), by_magnitude);
  std::sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), by_magnitude);

  SymMatrix pruned = a;
  for (std::size_t p = 0; p < k; ++p) pruned.set(pairs[p].i, pairs[p].j, 0.0);

  // Pruned pairs are re-added largest-first, i.e. pairs[k-1], pairs[k-2], ...
  auto with_readded = [&](std::size_t count) {
    SymMatrix m = pruned;
    for (std::size_t r = 0; r < count; ++r) {
      const Pair& p = pairs[k - 1 - r];
      m.set(p.i, p.j, a(p.i, p.j));
    }
    return m;
  };

  std::size_t retained = 0;
  if (cfg.pd_check && !is_positive_definite(pruned, cfg.pd_shift)) {
    if (!is_positive_definite(a, cfg.pd_shift)) {
      throw NotPositiveDefinite("prune_symmetric: input matrix fails Cholesky");
    }
    std::size_t lo = 0;
    std::size_t hi = k;
    bool found = false;
    for (std::size_t c = 1; c <= std::min(kLinearRepairSteps, k); ++c) {
      if (is_positive_definite(with_readded(c), cfg.pd_shift)) {
        hi = c;
        found = true;
        break;
      }
      lo = c;
    }
    if (!found) {
      std::size_t step = std::max<std::size_t>(lo, 1);
      while (lo + step < k) {
        const std::size_t c = lo + step;
        if (is_positive_definite(with_readded(c), cfg.pd_shift)) {
          hi = c;
          break;
        }
        lo = c;
        step *= 2;
      }
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (is_positive_definite(with_readded(mid), cfg.pd_shift)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
    }
    retained = hi;
    pruned = with_readded(retained);
  }

  ConditioningReport report;
  report.retained_for_pd = retained;
  report.epsilon_reg = cfg.pd_shift;
  std::size_t zero_pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (pruned(i, j) == 0.0) ++zero_pairs;
  report.achieved_sparsity =
      total_pairs == 0 ? 0.0 : static_cast<double>(zero_pairs) / static_cast<double>(total_pairs);
  return {std::move(pruned), report};
}

}  // namespace qnewton
