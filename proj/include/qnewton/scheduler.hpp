#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qnewton/sym_matrix.hpp"

namespace qnewton {

/// Constants of the two execution-time models, in seconds.
///   T_classical(n)       = c1 * n^3 + c2
///   T_quantum(n, k, d)   = q1 * d * k * log2(n / epsilon_prec) + q2
/// The quantum defaults assume attosecond gates with ~1e6 gates per cost
/// unit; c1/c2 default to a desk calibration of solve_classical.
struct CostModelParams {
  double c1 = 2e-10;
  double c2 = 1e-5;
  double q1 = 1e-12;
  double q2 = 1e-4;
  double epsilon_prec = 1e-3;

  /// Throws InvalidArgument unless c1 > 0, q1 > 0, c2 >= 0, q2 >= 0 and
  /// epsilon_prec in (0, 1).
  void validate() const;
  bool operator==(const CostModelParams&) const = default;
};

enum class Processor { Classical, Quantum };
std::string_view to_string(Processor p);

struct MatrixFeatures {
  std::size_t n = 0;
  double kappa = 1.0;
  double density = 1.0;
};

struct SchedulerDecision {
  Processor processor = Processor::Classical;
  double t_classical_pred = 0.0;
  double t_quantum_pred = 0.0;
  MatrixFeatures features;
  /// Set when the processor was imposed (ClassicalOnly / QuantumOnly) rather
  /// than chosen by comparing the two predictions.
  bool forced = false;

  double billed() const { return processor == Processor::Quantum ? t_quantum_pred : t_classical_pred; }
};

double cost_classical(std::size_t n, const CostModelParams& params);
/// +infinity for kappa = +infinity.
double cost_quantum(std::size_t n, double kappa, double density, const CostModelParams& params);

/// Quantum iff T_quantum < T_classical strictly; ties go Classical.
SchedulerDecision decide(std::size_t n, double kappa, double density, const CostModelParams& params);
SchedulerDecision force(Processor processor, std::size_t n, double kappa, double density,
                        const CostModelParams& params);

/// kappa* = (c1 n^3 + c2 - q2) / (q1 d log2(n / eps)). decide() is Quantum
/// below kappa* and Classical at or above it. Throws NoCrossover when the
/// numerator is <= 0.
double crossover_kappa(std::size_t n, double density, const CostModelParams& params);

/// Append-only record of scheduling decisions with running totals.
/// Single writer; totals are accumulated in append order.
class TimeLedger {
 public:
  void record(const SchedulerDecision& d);

  double billed_classical() const noexcept { return billed_classical_; }
  double billed_quantum() const noexcept { return billed_quantum_; }
  double total() const noexcept { return billed_classical_ + billed_quantum_; }
  std::span<const SchedulerDecision> decisions() const noexcept { return decisions_; }

 private:
  double billed_classical_ = 0.0;
  double billed_quantum_ = 0.0;
  std::vector<SchedulerDecision> decisions_;
};

struct ClassicalFit {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Least-squares fit of t = c1 n^3 + c2 with c2 clamped to >= 0 (refit
/// through the origin when the free intercept is negative). Requires >= 3
/// distinct sizes, each >= 16. Throws CalibrationFailed when c1 <= 0.
ClassicalFit fit_classical_constants(std::span<const std::size_t> sizes, std::span<const double> seconds);

/// Times solve_classical on random SPD matrices (median of `repetitions`
/// runs per size) and fits the classical constants.
ClassicalFit calibrate_classical(std::span<const std::size_t> sizes, int repetitions,
                                 std::uint64_t seed = 7);

struct QuantumSolveResult {
  std::vector<double> x;
  double billed = 0.0;
  MatrixFeatures features;
};

/// Emulated quantum linear solve. The solution is computed classically and
/// perturbed by seeded isotropic noise with ||noise||_2 = epsilon_prec *
/// ||x||_2; the billed time follows cost_quantum with the Merikoski bound
/// and the density of A.
QuantumSolveResult emulate_quantum_solve(const SymMatrix& a, std::span<const double> b,
                                         const CostModelParams& params, std::uint64_t rng_seed);
/// Same, reusing features already computed by the caller.
QuantumSolveResult emulate_quantum_solve(const SymMatrix& a, std::span<const double> b,
                                         const CostModelParams& params, std::uint64_t rng_seed,
                                         const MatrixFeatures& features);

}  // namespace qnewton
