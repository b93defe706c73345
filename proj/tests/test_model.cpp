#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qnewton/dataset.hpp"
#include "qnewton/error.hpp"
#include "qnewton/linalg.hpp"
#include "qnewton/model.hpp"
#include "qnewton/training.hpp"

using namespace qnewton;

namespace {

std::vector<double> concat(const LayerGradients& g) {
  std::vector<double> out;
  for (const auto& l : g) out.insert(out.end(), l.begin(), l.end());
  return out;
}

std::size_t layer_offset(const MlpModel& m, std::size_t layer) {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += m.parameter_count(l);
  return off;
}

}  // namespace

TEST_SUITE("MlpModel") {
  TEST_CASE("construction") {
    const MlpModel m({4, 3, 2}, 1);
    CHECK(m.layer_count() == 2);
    CHECK(m.parameter_count(0) == 4 * 3 + 3);
    CHECK(m.parameter_count(1) == 3 * 2 + 2);
    for (std::size_t o = 0; o < 3; ++o) CHECK(m.layer_parameters(0)[12 + o] == 0.0);
    CHECK(MlpModel({4, 3, 2}, 1) == m);
    CHECK_FALSE(MlpModel({4, 3, 2}, 2) == m);
    CHECK_THROWS_AS(MlpModel({4}), InvalidArgument);
    CHECK_THROWS_AS(MlpModel({4, 0, 2}), InvalidArgument);
  }

  TEST_CASE("uniform logits give loss ln(C)") {
    const MlpModel m({5, 10});
    std::mt19937_64 rng(2);
    const auto batch = oracle::random_batch(7, 5, 10, rng);
    CHECK(m.loss_and_accuracy(batch).loss == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  }

  TEST_CASE("loss matches the scalar oracle") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
      const std::vector<std::size_t> sizes{6, 5, 4, 3};
      const MlpModel m(sizes, 100 + t);
      const auto batch = oracle::random_batch(9, 6, 3, rng);
      const double expected = oracle::scalar_mlp_loss(sizes, m.flatten(), batch);
      CHECK(std::fabs(m.loss_and_accuracy(batch).loss - expected) <= 1e-10);
    }
  }

  TEST_CASE("accuracy is the argmax hit rate") {
    MlpModel m({2, 2});
    // Logit 0 = x0, logit 1 = x1.
    std::vector<double> flat{1, 0, 0, 1, 0, 0};
    m.unflatten(flat);
    Batch b{2, {1, 0, 0, 1, 1, 0, 0, 1}, {0, 1, 1, 1}};
    CHECK(m.loss_and_accuracy(b).accuracy == doctest::Approx(0.75));
  }

  TEST_CASE("flatten and unflatten round trip") {
    MlpModel m({3, 4, 2}, 9);
    const auto flat = m.flatten();
    MlpModel z({3, 4, 2});
    z.unflatten(flat);
    CHECK(z == m);
    CHECK_THROWS_AS(z.unflatten(std::vector<double>(3)), DimensionMismatch);
  }

  TEST_CASE("batch validation") {
    const MlpModel m({3, 2}, 1);
    CHECK_THROWS_AS(m.loss_and_accuracy(Batch{4, std::vector<double>(4), {0}}), DimensionMismatch);
    CHECK_THROWS_AS(m.loss_and_accuracy(Batch{3, std::vector<double>(3), {5}}), InvalidArgument);
  }

  TEST_CASE("property: gradient matches finite differences of the scalar loss") {
    std::mt19937_64 rng(17);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
      const std::vector<std::size_t> sizes{5, 4, 3};
      const MlpModel m(sizes, 500 + t);
      const auto batch = oracle::random_batch(6, 5, 3, rng);
      const auto g = concat(m.gradient(batch));
      const auto fd = oracle::fd_gradient(
          [&](std::span<const double> x) { return oracle::scalar_mlp_loss(sizes, x, batch); }, m.flatten(), 1e-6);
      if (oracle::max_abs_diff(g, fd) > 1e-5) ++failures;
    }
    CHECK(failures == 0);
  }

  TEST_CASE("bias gradient with zero weights is softmax minus one-hot") {
    const MlpModel m({3, 4});
    const Batch b{3, {0.2, 0.3, 0.4}, {2}};
    const auto g = m.gradient(b);
    for (std::size_t o = 0; o < 4; ++o) CHECK(g[0][12 + o] == doctest::Approx(0.25 - (o == 2 ? 1.0 : 0.0)));
  }

  TEST_CASE("duplicating a batch leaves loss and gradient unchanged") {
    std::mt19937_64 rng(21);
    const MlpModel m({4, 5, 3}, 8);
    const auto b = oracle::random_batch(5, 4, 3, rng);
    Batch d = b;
    d.inputs.insert(d.inputs.end(), b.inputs.begin(), b.inputs.end());
    d.labels.insert(d.labels.end(), b.labels.begin(), b.labels.end());
    CHECK(m.loss_and_accuracy(d).loss == doctest::Approx(m.loss_and_accuracy(b).loss).epsilon(1e-13));
    CHECK(oracle::max_abs_diff(concat(m.gradient(d)), concat(m.gradient(b))) <= 1e-14);
  }

  TEST_CASE("linearized model agrees with the original at the freeze point") {
    std::mt19937_64 rng(22);
    const MlpModel m({4, 6, 3}, 4);
    const auto b = oracle::random_batch(8, 4, 3, rng);
    const auto lin = m.linearized_at(b);
    CHECK(lin->loss_and_accuracy(b).loss == m.loss_and_accuracy(b).loss);
    CHECK(concat(lin->gradient(b)) == concat(m.gradient(b)));
    CHECK_THROWS_AS(lin->loss_and_accuracy(oracle::random_batch(3, 4, 3, rng)), DimensionMismatch);
  }
}

TEST_SUITE("QuadraticBowlModel") {
  TEST_CASE("loss and gradient") {
    const auto a = SymMatrix::diagonal(std::vector<double>{2, 4});
    const QuadraticBowlModel q(a, {1, 1}, {1, 2});
    const Batch empty;
    CHECK(q.loss_and_accuracy(empty).loss == doctest::Approx(0.5 * (2 + 16) - 3));
    CHECK(q.gradient(empty)[0] == std::vector<double>{1, 7});
    CHECK_THROWS_AS(QuadraticBowlModel(a, {1}, {1, 2}), DimensionMismatch);
  }
}

TEST_SUITE("hvp") {
  TEST_CASE("exact on a quadratic for every direction") {
    std::mt19937_64 rng(30);
    const auto s = oracle::random_spd(10, 1e3, rng);
    const QuadraticBowlModel q(s.a, std::vector<double>(10, 1.0), std::vector<double>(10, 0.5));
    std::normal_distribution<double> nd;
    for (int t = 0; t < 50; ++t) {
      std::vector<double> v(10);
      for (double& x : v) x = nd(rng);
      const auto hv = hvp(q, {}, 0, v, 1e-3);
      const auto ref = s.a.multiply(v);
      CHECK(oracle::max_abs_diff(hv, ref) <= 1e-9 * (1 + oracle::inf_norm(ref)));
    }
  }

  TEST_CASE("linear in the direction") {
    std::mt19937_64 rng(31);
    const MlpModel m({4, 5, 3}, 2);
    const auto b = oracle::random_batch(6, 4, 3, rng);
    const auto lin = m.linearized_at(b);
    const std::size_t n = m.parameter_count(1);
    std::normal_distribution<double> nd;
    std::vector<double> u(n), w(n), sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = nd(rng);
      w[i] = nd(rng);
      sum[i] = 2.0 * u[i] - 3.0 * w[i];
    }
    const auto hu = hvp(*lin, b, 1, u, 1e-4), hw = hvp(*lin, b, 1, w, 1e-4), hs = hvp(*lin, b, 1, sum, 1e-4);
    std::vector<double> combo(n);
    for (std::size_t i = 0; i < n; ++i) combo[i] = 2.0 * hu[i] - 3.0 * hw[i];
    CHECK(oracle::max_abs_diff(hs, combo) <= 1e-6 * (1 + oracle::inf_norm(combo)));
  }

  TEST_CASE("zero direction and bad arguments") {
    const QuadraticBowlModel q(SymMatrix::identity(3), {0, 0, 0}, {0, 0, 0});
    CHECK_THROWS_AS(hvp(q, {}, 0, std::vector<double>(3, 0.0), 1e-3), ZeroVector);
    CHECK_THROWS_AS(hvp(q, {}, 0, std::vector<double>(2, 1.0), 1e-3), InvalidArgument);
    CHECK_THROWS_AS(hvp(q, {}, 0, std::vector<double>(3, 1.0), 0.0), InvalidArgument);
  }
}

TEST_SUITE("layer_hessian") {
  TEST_CASE("matches the second difference of the scalar loss on a small network") {
    std::mt19937_64 rng(40);
    const std::vector<std::size_t> sizes{3, 4, 2};
    for (int t = 0; t < 5; ++t) {
      const MlpModel m(sizes, 70 + t);
      const auto b = oracle::random_batch(5, 3, 2, rng);
      const auto flat = m.flatten();
      for (std::size_t layer = 0; layer < 2; ++layer) {
        const std::size_t off = layer_offset(m, layer), n = m.parameter_count(layer);
        CHECK(n <= 50);
        std::vector<double> block(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                  flat.begin() + static_cast<std::ptrdiff_t>(off + n));
        auto loss = [&](std::span<const double> x) {
          auto full = flat;
          std::copy(x.begin(), x.end(), full.begin() + static_cast<std::ptrdiff_t>(off));
          return oracle::scalar_mlp_loss(sizes, full, b);
        };
        const auto ref = oracle::fd_hessian(loss, block, 1e-4);
        const auto h = layer_hessian(*m.linearized_at(b), b, layer);
        CHECK(oracle::max_abs_diff(h.data(), ref) <= 1e-5 * (1 + oracle::inf_norm(ref)));
      }
    }
  }

  TEST_CASE("linear regression Hessian is the mean outer product") {
    std::mt19937_64 rng(41);
    const std::size_t d = 12, m = 30;
    const auto b = oracle::random_batch(m, d, 1, rng);
    std::vector<double> targets(m), w(d);
    std::normal_distribution<double> nd;
    for (double& v : targets) v = nd(rng);
    for (double& v : w) v = nd(rng);
    const oracle::LinearRegressionModel model(w, targets);
    std::vector<double> ref(d * d, 0.0);
    for (std::size_t s = 0; s < m; ++s)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) ref[i * d + j] += b.input(s)[i] * b.input(s)[j] / static_cast<double>(m);
    CHECK(oracle::max_abs_diff(layer_hessian(model, b, 0).data(), ref) <= 1e-6);
  }

  TEST_CASE("raw assembled Hessian is nearly symmetric") {
    std::mt19937_64 rng(42);
    const MlpModel m({8, 6, 4}, 3);
    const auto b = oracle::random_batch(16, 8, 4, rng);
    const auto lin = m.linearized_at(b);
    for (std::size_t layer = 0; layer < 2; ++layer) {
      const std::size_t n = m.parameter_count(layer);
      const auto raw = assemble_layer_hessian(*lin, b, layer, fd_step_for_layer(*lin, layer, 1e-3));
      double asym = 0.0, fro = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          asym = std::max(asym, std::fabs(raw[i * n + j] - raw[j * n + i]));
          fro += raw[i * n + j] * raw[i * n + j];
        }
      CHECK(asym <= 1e-6 * std::sqrt(fro));
    }
  }

  TEST_CASE("serial and parallel assembly are bitwise identical") {
    std::mt19937_64 rng(43);
    const MlpModel m({10, 8, 5}, 6);
    const auto b = oracle::random_batch(12, 10, 5, rng);
    const auto lin = m.linearized_at(b);
    omp_set_num_threads(4);
    for (std::size_t layer = 0; layer < 2; ++layer) {
      const double h = fd_step_for_layer(*lin, layer, 1e-3);
      CHECK(assemble_layer_hessian(*lin, b, layer, h, Execution::Serial) ==
            assemble_layer_hessian(*lin, b, layer, h, Execution::Parallel));
    }
  }

  TEST_CASE("layer index out of range") {
    const MlpModel m({3, 2}, 1);
    CHECK_THROWS_AS(layer_hessian(m, Batch{3, {0, 0, 0}, {0}}, 5), InvalidArgument);
  }
}

TEST_SUITE("quadratic bowl dataset") {
  TEST_CASE("condition number of the generated matrix") {
    for (double kappa : {1.0, 10.0, 1e4}) {
      const auto p = make_quadratic_bowl(8, kappa, 5);
      CHECK(exact_condition_number(p.a) == doctest::Approx(kappa).epsilon(1e-6));
    }
  }
}
