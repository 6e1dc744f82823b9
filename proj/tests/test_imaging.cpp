#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pmlsv/imaging.hpp"
#include "test_helpers.hpp"

using namespace pmlsv;
using testutil::random_matrix;

namespace {

namespace fs = std::filesystem;

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "pmlsv_test_imaging";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("patchify of a whole-image patch is the column-major vectorization") {
  const Matrix img = random_matrix(4, 4, rng::key(200, {0}));
  const Matrix pm = patchify(img, {4, 4, 4, 1.0});
  REQUIRE(pm.rows() == 16);
  REQUIRE(pm.cols() == 1);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) CHECK(pm(j * 4 + i, 0) == img(i, j));
  }
}

TEST_CASE("patchify hand trace on a 2x2 image") {
  Matrix img(2, 2);
  img << 1, 2, 3, 4;
  const Matrix pm = patchify(img, {2, 2, 2, 1.0});
  CHECK(pm(0, 0) == 1);
  CHECK(pm(1, 0) == 3);
  CHECK(pm(2, 0) == 2);
  CHECK(pm(3, 0) == 4);
}

TEST_CASE("patch blocks are enumerated row-major") {
  // 2x4 image, patch 2: block (0,0) then block (0,1).
  Matrix img(2, 4);
  img << 1, 2, 5, 6, 3, 4, 7, 8;
  const Matrix pm = patchify(img, {2, 4, 2, 1.0});
  REQUIRE(pm.cols() == 2);
  CHECK(pm(0, 0) == 1);
  CHECK(pm(3, 0) == 4);
  CHECK(pm(0, 1) == 5);
  CHECK(pm(3, 1) == 8);
}

TEST_CASE("patchify and unpatchify are mutually inverse bit for bit") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageSpec spec{24, 16, 8, 1.0};
    const Matrix img = random_matrix(24, 16, rng::key(201, {seed}), -1.0, 5.0);
    const Matrix back = unpatchify(patchify(img, spec), spec);
    CHECK(testutil::bitwise_equal(back, img));
  }
}

TEST_CASE("unpatchify of zero is zero and of a single patch a reshape") {
  const ImageSpec spec{8, 8, 8, 1.0};
  CHECK(unpatchify(Matrix::Zero(64, 1), spec).norm() == 0.0);
  const Matrix pm = random_matrix(64, 1, rng::key(202, {0}));
  const Matrix img = unpatchify(pm, spec);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) CHECK(img(i, j) == pm(j * 8 + i, 0));
  }
}

TEST_CASE("non-multiple dimensions are rejected, not padded") {
  const Matrix img = Matrix::Ones(10, 8);
  CHECK_THROWS_AS(patchify(img, {10, 8, 8, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(unpatchify(Matrix::Ones(64, 2), {8, 9, 8, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(patchify(img, {12, 8, 4, 1.0}), std::invalid_argument);
}

TEST_CASE("low_rank_approx satisfies the Eckart-Young error") {
  const Matrix m = random_matrix(20, 20, rng::key(203, {0}), 0.0, 1.0);
  const SvdFactors f = svd(m);
  const int r = 5;
  const Matrix t = low_rank_approx(m, r);
  double tail = 0.0;
  for (Eigen::Index i = r; i < f.sigma.size(); ++i) tail += f.sigma[i] * f.sigma[i];
  CHECK((m - t).norm() == doctest::Approx(std::sqrt(tail)).epsilon(1e-10));
  // Numerical rank of the truncation is at most r.
  const SvdFactors ft = svd(t);
  CHECK(numerical_rank(ft.sigma, 1e-10) <= r);
}

TEST_CASE("rank_truncate is the identity on already low-rank nonnegative input") {
  const Matrix a = random_matrix(12, 3, rng::key(204, {1}), 0.1, 1.0);
  const Matrix b = random_matrix(3, 10, rng::key(204, {2}), 0.1, 1.0);
  const Matrix m = a * b;  // nonnegative, rank 3
  const Matrix t = rank_truncate(m, 3);
  CHECK(testutil::rel_frob_err(t, m) <= 1e-10);
  const Matrix outer = a.col(0) * b.row(0);
  CHECK(testutil::rel_frob_err(rank_truncate(outer, 1), outer) <= 1e-10);
}

TEST_CASE("rank_truncate clips and preserves the entry sum") {
  const Matrix m = random_matrix(16, 16, rng::key(205, {0}), 0.0, 1.0);
  const Matrix t = rank_truncate(m, 4);
  CHECK(t.minCoeff() >= 0.0);
  CHECK(entry_sum_norm(t) == doctest::Approx(entry_sum_norm(m)).epsilon(1e-12));
  CHECK(testutil::bitwise_equal(rank_truncate(Matrix::Zero(4, 4), 2),
                                Matrix::Zero(4, 4)));
}

TEST_CASE("normalized_risk basics") {
  const Matrix m = random_matrix(6, 6, rng::key(206, {0}), 0.0, 2.0);
  CHECK(normalized_risk(m, m, 3.0) == 0.0);
  const Matrix e = random_matrix(6, 6, rng::key(206, {1}), 0.0, 2.0);
  CHECK(normalized_risk(m, e, 3.0) == normalized_risk(e, m, 3.0));
  CHECK_THROWS_AS(normalized_risk(m, Matrix::Zero(3, 3), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(normalized_risk(m, e, 0.0), std::invalid_argument);
}

TEST_CASE("risk of the zero estimate is at most 1 for unit-intensity truth") {
  // With entry_sum(m) = I and m >= 0, ||m||_F^2 <= I^2, equality only when a
  // single entry carries everything.
  const Matrix spread = random_matrix(5, 5, rng::key(207, {0}), 0.1, 1.0);
  const double I = entry_sum_norm(spread);
  CHECK(normalized_risk(spread, Matrix::Zero(5, 5), I) < 1.0);
  Matrix point = Matrix::Zero(5, 5);
  point(2, 3) = 7.0;
  CHECK(normalized_risk(point, Matrix::Zero(5, 5), 7.0) == doctest::Approx(1.0));
}

TEST_CASE("normalized_risk is scale invariant") {
  const Matrix m = random_matrix(6, 6, rng::key(208, {0}), 0.0, 2.0);
  const Matrix e = random_matrix(6, 6, rng::key(208, {1}), 0.0, 2.0);
  const double base = normalized_risk(m, e, 5.0);
  for (double a : {2.0, 7.5, 100.0}) {
    CHECK(normalized_risk(a * m, a * e, a * 5.0) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("scale_intensity") {
  const Matrix m = random_matrix(4, 4, rng::key(209, {0}), 0.0, 1.0);
  CHECK(testutil::bitwise_equal(scale_intensity(m, 1.0), m));
  CHECK_THROWS_AS(scale_intensity(m, 0.99), std::invalid_argument);
  // alpha = 4 on total intensity 2.37e7 gives 9.48e7.
  const Matrix flat = Matrix::Constant(4, 4, 2.37e7 / 16.0);
  CHECK(entry_sum_norm(scale_intensity(flat, 4.0)) ==
        doctest::Approx(9.48e7).epsilon(1e-12));
  for (double a : {1.5, 3.0, 9.0}) {
    CHECK(entry_sum_norm(scale_intensity(m, a)) ==
          doctest::Approx(a * entry_sum_norm(m)).epsilon(1e-12));
  }
}

TEST_CASE("synthetic_flare is nonnegative, normalized, low-rank, reproducible") {
  SyntheticImageSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.bumps = 4;
  spec.intensity = 1e5;
  spec.seed = 9;
  const Matrix img = synthetic_flare(spec);
  CHECK(img.minCoeff() >= 0.0);
  CHECK(entry_sum_norm(img) == doctest::Approx(1e5).epsilon(1e-9));
  const SvdFactors f = svd(img);
  CHECK(f.sigma[4] <= 1e-10 * f.sigma[0]);  // rank <= bumps
  CHECK(testutil::bitwise_equal(img, synthetic_flare(spec)));
  spec.seed = 10;
  CHECK_FALSE(testutil::bitwise_equal(img, synthetic_flare(spec)));
}

TEST_CASE("pgm round trip and header") {
  const fs::path path = test_dir() / "img.pgm";
  const Matrix img = random_matrix(6, 9, rng::key(210, {0}), -3.0, 12.0);
  write_pgm(img, path.string());
  const Matrix back = read_pgm(path.string());
  REQUIRE(back.rows() == 6);
  REQUIRE(back.cols() == 9);
  CHECK(back.minCoeff() >= 0.0);
  CHECK(back.maxCoeff() <= 255.0);
  // The brightest and darkest pixels land on the ends of the scale.
  CHECK(back.maxCoeff() == 255.0);
  CHECK(back.minCoeff() == 0.0);
  std::ifstream in(path);
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "P2");
  CHECK(l2.rfind("# intensity-scale min=", 0) == 0);
}

TEST_CASE("pgm reader handles comments and rejects other formats") {
  const fs::path path = test_dir() / "hand.pgm";
  {
    std::ofstream out(path);
    out << "P2\n# a comment\n3 2\n# another\n255\n0 10 20\n30 40 50\n";
  }
  const Matrix img = read_pgm(path.string());
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 3);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(1, 2) == 50.0);

  const fs::path bad = test_dir() / "bad.pgm";
  {
    std::ofstream out(bad);
    out << "P5\n3 2\n255\n";
  }
  CHECK_THROWS_AS(read_pgm(bad.string()), std::runtime_error);
}

TEST_CASE("csv matrix round trip is bit exact") {
  const fs::path path = test_dir() / "m.csv";
  const Matrix m = random_matrix(5, 7, rng::key(211, {0}), -2.0, 2.0);
  write_csv_matrix(m, path.string());
  CHECK(testutil::bitwise_equal(read_csv_matrix(path.string()), m));
}
