#include "doctest.h"

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"
#include "esnssm/random.hpp"
#include "support.hpp"

using namespace esnssm;
using namespace esnssm::linalg;

TEST_SUITE("linalg") {

TEST_CASE("expm matches a scaled Taylor series") {
  CounterRng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    const double scale = std::pow(10.0, -3.0 + 4.0 * rng.uniform());  // ‖M‖ from 1e-3 to 10
    MatrixXd m = rng.normal_matrix(n, n);
    m *= scale / oracle::norm2(m);
    const MatrixXd ref = oracle::taylor_expm(m);
    CHECK(oracle::max_abs(expm(m) - ref) <= 1e-12 * std::max(1.0, oracle::max_abs(ref)) * 10);
  }
}

TEST_CASE("expm of a rotation generator") {
  MatrixXd m(2, 2);
  m << 0, -1, 1, 0;
  const MatrixXd e = expm(0.7 * m);
  CHECK(e(0, 0) == doctest::Approx(std::cos(0.7)).epsilon(1e-15));
  CHECK(e(1, 0) == doctest::Approx(std::sin(0.7)).epsilon(1e-15));
}

TEST_CASE("discrete Lyapunov against direct summation") {
  CounterRng rng(12);
  for (Eigen::Index n : {1, 3, 8, 30, 40}) {
    const MatrixXd a = oracle::with_radius(rng.normal_matrix(n, n), 0.8);
    const MatrixXd g = rng.normal_matrix(n, 2);
    const MatrixXd s = g * g.transpose();
    const MatrixXd x = solve_discrete_lyapunov(a, s);
    const MatrixXd ref = oracle::lyapunov_series(a, s);
    CHECK(oracle::max_abs(x - ref) <= 1e-9 * std::max(1.0, oracle::max_abs(ref)));
    CHECK(lyapunov_residual(a, x, s) <= 1e-10);
    const MatrixXd xt = solve_discrete_lyapunov(a, s, true);
    CHECK(oracle::max_abs(xt - oracle::lyapunov_series(a.transpose(), s)) <= 1e-9 * std::max(1.0, oracle::max_abs(ref)));
    CHECK(x == x.transpose());
  }
}

TEST_CASE("discrete Lyapunov refuses unstable A") {
  CHECK_THROWS_AS(solve_discrete_lyapunov(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)), DomainError);
}

TEST_CASE("spectral norm agrees with the SVD") {
  CounterRng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd m = rng.normal_matrix(1 + trial % 9, 1 + (trial * 3) % 7);
    const double ref = Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
    CHECK(spectral_norm(m) == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(spectral_norm(MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("spectral radius examples") {
  CHECK(spectral_radius(Eigen::Vector2d(0.5, 0.3).asDiagonal().toDenseMatrix()) == doctest::Approx(0.5));
  const double c = std::cos(M_PI / 6), s = std::sin(M_PI / 6);
  MatrixXd r(2, 2);
  r << c, -s, s, c;
  CHECK(spectral_radius(0.9 * r) == doctest::Approx(0.9).epsilon(1e-12));
  // λ² − 0.25 = 0 has roots ±0.5.
  MatrixXd m(2, 2);
  m << 0, 1, 0.25, 0;
  CHECK(spectral_radius(m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("PSD checks and eigenvalue floor") {
  MatrixXd m(2, 2);
  m << 1, 0, 0, -1e-13;
  CHECK_NOTHROW(require_psd(m, "m"));
  m(1, 1) = -1e-6;
  CHECK_THROWS_AS(require_psd(m, "m"), DomainError);
  m << 2, 0, 0, -1;
  CHECK(floor_eigenvalues(m, 1e-12) == 1);
  CHECK(min_eigenvalue_sym(m) == doctest::Approx(1e-12));
  MatrixXd singular = MatrixXd::Zero(3, 3);
  singular(0, 0) = 1;
  const MatrixXd l = cholesky_with_jitter(singular);
  CHECK(oracle::max_abs(l * l.transpose() - singular) <= 1e-10);
}

TEST_CASE("numerical rank") {
  MatrixXd m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  CHECK(numerical_rank(m, 1e-12) == 2);
  CHECK(numerical_rank(MatrixXd::Identity(4, 4), 1e-12) == 4);
}

}  // TEST_SUITE
