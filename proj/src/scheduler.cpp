#include "qnewton/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "qnewton/conditioning.hpp"
#include "qnewton/error.hpp"
#include "qnewton/linalg.hpp"

namespace qnewton {

void CostModelParams::validate() const {
  if (!(c1 > 0.0)) throw InvalidArgument("cost model: c1 must be > 0");
  if (!(q1 > 0.0)) throw InvalidArgument("cost model: q1 must be > 0");
  if (!(c2 >= 0.0)) throw InvalidArgument("cost model: c2 must be >= 0");
  if (!(q2 >= 0.0)) throw InvalidArgument("cost model: q2 must be >= 0");
  if (!(epsilon_prec > 0.0 && epsilon_prec < 1.0)) {
    throw InvalidArgument("cost model: epsilon_prec must be in (0, 1)");
  }
}

std::string_view to_string(Processor p) { return p == Processor::Quantum ? "quantum" : "classical"; }

double cost_classical(std::size_t n, const CostModelParams& params) {
  const double nd = static_cast<double>(n);
  return params.c1 * nd * nd * nd + params.c2;
}

double cost_quantum(std::size_t n, double kappa, double density, const CostModelParams& params) {
  if (params.q1 == 0.0) return params.q2;
  if (std::isinf(kappa)) return std::numeric_limits<double>::infinity();
  const double log_term = std::log2(static_cast<double>(n) / params.epsilon_prec);
  return params.q1 * density * kappa * log_term + params.q2;
}

SchedulerDecision decide(std::size_t n, double kappa, double density, const CostModelParams& params) {
  SchedulerDecision d;
  d.t_classical_pred = cost_classical(n, params);
  d.t_quantum_pred = cost_quantum(n, kappa, density, params);
  d.features = {n, kappa, density};
  d.processor = d.t_quantum_pred < d.t_classical_pred ? Processor::Quantum : Processor::Classical;
  return d;
}

SchedulerDecision force(Processor processor, std::size_t n, double kappa, double density,
                        const CostModelParams& params) {
  SchedulerDecision d = decide(n, kappa, density, params);
  d.processor = processor;
  d.forced = true;
  return d;
}

double crossover_kappa(std::size_t n, double density, const CostModelParams& params) {
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("crossover_kappa: density must be in (0, 1]");
  const double numerator = cost_classical(n, params) - params.q2;
  if (numerator < 0.0) throw NoCrossover("crossover_kappa: classical solve is always cheaper");
  if (numerator == 0.0) return 0.0;
  const double log_term = std::log2(static_cast<double>(n) / params.epsilon_prec);
  return numerator / (params.q1 * density * log_term);
}

void TimeLedger::record(const SchedulerDecision& d) {
  if (d.processor == Processor::Quantum) {
    billed_quantum_ += d.t_quantum_pred;
  } else {
    billed_classical_ += d.t_classical_pred;
  }
  decisions_.push_back(d);
}

ClassicalFit fit_classical_constants(std::span<const std::size_t> sizes, std::span<const double> seconds) {
  if (sizes.size() != seconds.size()) throw InvalidArgument("calibration: sizes and timings differ in length");
  const std::set<std::size_t> distinct(sizes.begin(), sizes.end());
  if (distinct.size() < 3) throw InvalidArgument("calibration: need at least 3 distinct sizes");
  if (*distinct.begin() < 16) throw InvalidArgument("calibration: sizes must be >= 16");

  const auto m = static_cast<double>(sizes.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::pow(static_cast<double>(sizes[i]), 3);
    sx += x;
    sy += seconds[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, sxx0 = 0.0, sxy0 = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::pow(static_cast<double>(sizes[i]), 3);
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (seconds[i] - my);
    sxx0 += x * x;
    sxy0 += x * seconds[i];
  }
  ClassicalFit fit{sxy / sxx, 0.0};
  fit.c2 = my - fit.c1 * mx;
  if (fit.c2 < 0.0) fit = {sxy0 / sxx0, 0.0};
  if (!(fit.c1 > 0.0)) throw CalibrationFailed("calibration: fitted c1 is not positive");
  return fit;
}

ClassicalFit calibrate_classical(std::span<const std::size_t> sizes, int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw InvalidArgument("calibration: repetitions must be >= 1");
  // Validate before spending time on measurements.
  {
    const std::set<std::size_t> distinct(sizes.begin(), sizes.end());
    if (distinct.size() < 3 || *distinct.begin() < 16) {
      throw InvalidArgument("calibration: need at least 3 distinct sizes, each >= 16");
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> medians;
  medians.reserve(sizes.size());
  for (std::size_t n : sizes) {
    std::vector<double> m(n * n);
    for (double& v : m) v = gauss(rng);
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += m[i * n + k] * m[j * n + k];
        s /= static_cast<double>(n);
        if (i == j) s += 1.0;
        a[i * n + j] = s;
        a[j * n + i] = s;
      }
    const SymMatrix spd(n, std::move(a));
    std::vector<double> b(n);
    for (double& v : b) v = gauss(rng);

    std::vector<double> times;
    for (int r = 0; r < repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto x = solve_classical(spd, b);
      const auto t1 = std::chrono::steady_clock::now();
      if (x.empty()) throw CalibrationFailed("calibration: empty solution");
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    medians.push_back(times[times.size() / 2]);
  }
  return fit_classical_constants(sizes, medians);
}

QuantumSolveResult emulate_quantum_solve(const SymMatrix& a, std::span<const double> b,
                                         const CostModelParams& params, std::uint64_t rng_seed) {
  const MatrixFeatures features{a.n(), merikoski_bound(a), density(a)};
  return emulate_quantum_solve(a, b, params, rng_seed, features);
}

QuantumSolveResult emulate_quantum_solve(const SymMatrix& a, std::span<const double> b,
                                         const CostModelParams& params, std::uint64_t rng_seed,
                                         const MatrixFeatures& features) {
  QuantumSolveResult out;
  out.x = solve_classical(a, b);
  out.features = features;
  out.billed = cost_quantum(features.n, features.kappa, features.density, params);

  double x_norm = 0.0;
  for (double v : out.x) x_norm += v * v;
  x_norm = std::sqrt(x_norm);
  if (params.epsilon_prec == 0.0 || x_norm == 0.0) return out;

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(out.x.size());
  double noise_norm = 0.0;
  do {
    noise_norm = 0.0;
    for (double& v : noise) {
      v = gauss(rng);
      noise_norm += v * v;
    }
  } while (noise_norm == 0.0);
  const double scale = params.epsilon_prec * x_norm / std::sqrt(noise_norm);
  for (std::size_t i = 0; i < noise.size(); ++i) out.x[i] += scale * noise[i];
  return out;
}

}  // namespace qnewton
