#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pmlsv/poisson_model.hpp"
#include "test_helpers.hpp"

using namespace pmlsv;
using testutil::random_matrix;

namespace {

struct Instance {
  SensingOperator op;
  MeasurementSet y;
  Matrix m;
};

// Unit-scale instance: entries O(1), rates O(1..10), counts small integers.
Instance make_instance(std::uint64_t seed, int rows = 6, int cols = 6, int n = 40,
                       double p = 0.5) {
  SensingConfig c;
  c.rows = rows;
  c.cols = cols;
  c.n_meas = n;
  c.zero_prob = p;
  c.seed = seed;
  Instance inst;
  inst.op = generate(c);
  inst.m = random_matrix(rows, cols, rng::key(seed, {0xabc}), 0.5, 2.0);
  inst.y = sample_poisson(inst.op, inst.m, seed + 1);
  return inst;
}

}  // namespace

TEST_CASE("default_rate_floor scales with I/N") {
  CHECK(default_rate_floor(1e7, 1000) == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK_THROWS_AS(default_rate_floor(0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(default_rate_floor(1.0, 0), std::invalid_argument);
}

TEST_CASE("nll with zero counts is the sum of rates") {
  Instance inst = make_instance(21);
  std::fill(inst.y.counts.begin(), inst.y.counts.end(), 0);
  const ObjectiveParams params{0.0, 1e-12};
  const double want = forward(inst.op, inst.m).sum();
  CHECK(neg_log_likelihood(inst.op, inst.y, inst.m, params) ==
        doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("nll of a single unit-rate unit-count measurement is 1") {
  SensingConfig c;
  c.rows = 1;
  c.cols = 1;
  c.n_meas = 1;
  c.zero_prob = 0.0;
  c.seed = 1;
  const SensingOperator op = generate(c);
  const Matrix m = Matrix::Ones(1, 1);  // rate = 1/N * 1 = 1
  MeasurementSet y;
  y.counts = {1};
  CHECK(neg_log_likelihood(op, y, m, {0.0, 1e-12}) == 1.0);
}

TEST_CASE("nll matches a direct evaluation of the formula") {
  const Instance inst = make_instance(22);
  const ObjectiveParams params{0.0, 1e-9};
  const Vector rates = forward(inst.op, inst.m);
  double want = 0.0;
  for (int j = 0; j < inst.op.n_meas(); ++j) {
    const double r = std::max(rates[j], params.rate_floor);
    want += r - static_cast<double>(inst.y.counts[static_cast<std::size_t>(j)]) *
                    std::log(r);
  }
  const double got = neg_log_likelihood(inst.op, inst.y, inst.m, params);
  CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
}

TEST_CASE("gradient vanishes when counts equal rates exactly") {
  SensingConfig c;
  c.rows = 2;
  c.cols = 2;
  c.n_meas = 2;
  c.zero_prob = 0.0;
  c.seed = 2;
  const SensingOperator op = generate(c);
  const Matrix m = Matrix::Ones(2, 2);  // every rate is exactly 4/2 = 2
  MeasurementSet y;
  y.counts = {2, 2};
  const Matrix g = gradient(op, y, m, {0.0, 1e-12});
  CHECK(g.norm() == 0.0);
}

TEST_CASE("gradient with zero counts is the mask sum") {
  const Instance inst = make_instance(23);
  MeasurementSet y = inst.y;
  std::fill(y.counts.begin(), y.counts.end(), 0);
  const Matrix got = gradient(inst.op, y, inst.m, {0.0, 1e-12});
  const Matrix want = adjoint(inst.op, Vector::Ones(inst.op.n_meas()));
  CHECK(testutil::bitwise_equal(got, want));
}

TEST_CASE("gradient matches central finite differences") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const Instance inst = make_instance(seed);
    const ObjectiveParams params{0.0, 1e-12};
    const double h = 1e-5;  // entries are O(1)
    const Matrix got = gradient(inst.op, inst.y, inst.m, params);
    const Matrix want = oracle::fd_gradient(inst.op, inst.y, inst.m, params, h);
    CHECK((got - want).norm() / want.norm() <= 1e-6);
  }
}

TEST_CASE("objective with lambda = 0 equals the likelihood term") {
  const Instance inst = make_instance(24);
  const ObjectiveParams params{0.0, 1e-12};
  CHECK(objective(inst.op, inst.y, inst.m, params) ==
        neg_log_likelihood(inst.op, inst.y, inst.m, params));
}

TEST_CASE("objective of the all-zero degenerate case is floor-dominated") {
  const Instance inst = make_instance(25);
  MeasurementSet y = inst.y;
  std::fill(y.counts.begin(), y.counts.end(), 0);
  const ObjectiveParams params{0.5, 1e-10};
  const Matrix zero = Matrix::Zero(inst.op.rows(), inst.op.cols());
  const double got = objective(inst.op, y, zero, params);
  CHECK(got == doctest::Approx(inst.op.n_meas() * params.rate_floor).epsilon(1e-12));
}

TEST_CASE("objective equals likelihood plus weighted nuclear norm") {
  const Instance inst = make_instance(26);
  const ObjectiveParams params{0.7, 1e-12};
  const double whole = objective(inst.op, inst.y, inst.m, params);
  const double parts = neg_log_likelihood(inst.op, inst.y, inst.m, params) +
                       params.lambda * nuclear_norm(inst.m);
  CHECK(std::abs(whole - parts) <= 1e-12 * std::max(1.0, std::abs(parts)));
}

TEST_CASE("likelihood term is convex along segments") {
  const Instance base = make_instance(27);
  const ObjectiveParams params{0.0, 1e-12};
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    const Matrix m1 = random_matrix(6, 6, rng::key(seed, {1}), 0.5, 2.0);
    const Matrix m2 = random_matrix(6, 6, rng::key(seed, {2}), 0.5, 2.0);
    const double f1 = neg_log_likelihood(base.op, base.y, m1, params);
    const double f2 = neg_log_likelihood(base.op, base.y, m2, params);
    for (double t : {0.25, 0.5, 0.75}) {
      const double ft =
          neg_log_likelihood(base.op, base.y, t * m1 + (1.0 - t) * m2, params);
      CHECK(ft <= t * f1 + (1.0 - t) * f2 + 1e-9);
    }
  }
}

TEST_CASE("the floor is transparent when rates sit far above it") {
  const Instance inst = make_instance(28);
  const Vector rates = forward(inst.op, inst.m);
  const double floor = rates.minCoeff() / 10.0;
  REQUIRE(floor > 0.0);
  const ObjectiveParams with{0.3, floor};
  const ObjectiveParams off{0.3, 1e-300};  // floor effectively disabled
  CHECK(neg_log_likelihood(inst.op, inst.y, inst.m, with) ==
        neg_log_likelihood(inst.op, inst.y, inst.m, off));
  CHECK(testutil::bitwise_equal(gradient(inst.op, inst.y, inst.m, with),
                                gradient(inst.op, inst.y, inst.m, off)));
}

TEST_CASE("model functions reject mismatched shapes") {
  const Instance inst = make_instance(29);
  const ObjectiveParams params{0.1, 1e-12};
  CHECK_THROWS_AS(
      neg_log_likelihood(inst.op, inst.y, Matrix::Zero(3, 3), params),
      std::invalid_argument);
  MeasurementSet bad = inst.y;
  bad.counts.pop_back();
  CHECK_THROWS_AS(gradient(inst.op, bad, inst.m, params), std::invalid_argument);
  CHECK_THROWS_AS(objective(inst.op, inst.y, inst.m, {0.1, 0.0}),
                  std::invalid_argument);
}
