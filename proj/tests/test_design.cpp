#include "doctest.h"

#include <cmath>
#include <cstring>
#include <numbers>

#include "esnssm/design.hpp"
#include "esnssm/error.hpp"
#include "esnssm/linearize.hpp"
#include "esnssm/linalg.hpp"
#include "esnssm/stability.hpp"
#include "support.hpp"

using namespace esnssm;

TEST_SUITE("design") {

TEST_CASE("target radius") {
  CHECK(target_radius({20.0, std::nullopt}) == doctest::Approx(std::exp(-1.0 / 20)).epsilon(1e-15));
  CHECK(target_radius({std::nullopt, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(target_radius({1e9, std::nullopt}) - 1.0) <= 1e-9);
  CHECK_THROWS_AS(target_radius({20.0, 3.0}), DomainError);
  CHECK_THROWS_AS(target_radius({std::nullopt, std::nullopt}), DomainError);
  CHECK_THROWS_AS(target_radius({-1.0, std::nullopt}), DomainError);
}

TEST_CASE("gamma for a target radius") {
  auto g = gamma_for_radius(0.95, 0.5, 1.0, 1.0);
  CHECK(g.gamma == doctest::Approx(0.9).epsilon(1e-14));
  CHECK_FALSE(g.clipped);
  g = gamma_for_radius(0.95, 0.5, 1.0, 2.0);
  CHECK(g.clipped);
  CHECK(g.gamma < 0.5);
  CHECK(g.gamma >= 0.5 - 1e-8);
  CHECK_THROWS_AS(gamma_for_radius(0.4, 0.5, 1.0, 1.0), DomainError);
}

TEST_CASE("normal reservoir spectra") {
  MatrixXd w = make_normal_reservoir(1, {{0.9, 0.0}}, 3);
  CHECK(std::abs(w(0, 0)) == doctest::Approx(0.9).epsilon(1e-15));

  w = make_normal_reservoir(2, {{0.9, std::numbers::pi / 3}}, 4);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<MatrixXd>(w).eigenvalues();
  const std::complex<double> target = std::polar(0.9, std::numbers::pi / 3);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const auto e = ev(i);
    CHECK(std::min(std::abs(e - target), std::abs(e - std::conj(target))) <= 1e-12);
  }
  CHECK((w.transpose() * w - w * w.transpose()).norm() <= 1e-12);

  const auto poles = log_uniform_poles(8, 0.5, 0.99);
  double rmax = 0;
  for (const auto& p : poles) {
    CHECK(p.radius >= 0.5);
    CHECK(p.radius < 0.99);
    rmax = std::max(rmax, p.radius);
  }
  w = make_normal_reservoir(8, poles, 5);
  const Eigen::VectorXcd ev8 = Eigen::EigenSolver<MatrixXd>(w).eigenvalues();
  CHECK(ev8.cwiseAbs().maxCoeff() == doctest::Approx(rmax).epsilon(1e-10));
  CHECK((w.transpose() * w - w * w.transpose()).norm() <= 1e-10);

  CHECK_THROWS_AS(make_normal_reservoir(3, {{0.9, 1.0}}, 0), DomainError);
  CHECK_THROWS_AS(make_normal_reservoir(1, {{1.2, 0.0}}, 0), DomainError);
}

TEST_CASE("normality across random pole sets") {
  CounterRng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PoleSpec> poles;
    Eigen::Index used = 0;
    const Eigen::Index n = 2 + trial % 9;
    while (used < n) {
      if (n - used >= 2 && rng.uniform() < 0.5) {
        poles.push_back({0.05 + 0.9 * rng.uniform(), 0.1 + 3.0 * rng.uniform()});
        used += 2;
      } else {
        poles.push_back({0.05 + 0.9 * rng.uniform(), rng.uniform() < 0.5 ? 0.0 : std::numbers::pi});
        used += 1;
      }
    }
    const MatrixXd w = make_normal_reservoir(n, poles, trial);
    CHECK((w.transpose() * w - w * w.transpose()).norm() <= 1e-10);
    // Normal ⇒ ‖W‖₂ equals the largest requested radius.
    double rmax = 0;
    for (const auto& p : poles) rmax = std::max(rmax, p.radius);
    CHECK(oracle::norm2(w) == doctest::Approx(rmax).epsilon(1e-10));
  }
}

TEST_CASE("sparse reservoirs") {
  const MatrixXd w = make_sparse_reservoir(30, 4, 0.8, 1.0, 11);
  for (Eigen::Index i = 0; i < 30; ++i) CHECK((w.row(i).array() != 0.0).count() == 4);
  CHECK(oracle::norm2(w) == doctest::Approx(0.8).epsilon(1e-9));
  const MatrixXd again = make_sparse_reservoir(30, 4, 0.8, 1.0, 11);
  CHECK(std::memcmp(w.data(), again.data(), sizeof(double) * std::size_t(w.size())) == 0);
  CHECK(make_sparse_reservoir(30, 4, 0.8, 1.0, 12) != w);
  const MatrixXd dense = make_sparse_reservoir(6, 6, 0.5, 1.0, 13);
  CHECK((dense.array() != 0.0).count() == 36);

  CounterRng rng(92);
  for (double leak : {0.05, 0.3, 0.7, 1.0}) {
    ReservoirParams p{make_sparse_reservoir(20, 3, 0.9, 1.0, std::uint64_t(leak * 100)), rng.normal_matrix(20, 2),
                      VectorXd::Zero(20), leak, Activation::tanh()};
    const auto c = certify_lipschitz(p);
    CHECK(c.verdict == Verdict::Pass);
    CHECK(c.kappa == doctest::Approx((1 - leak) + leak * 0.9).epsilon(1e-9));
  }
  CHECK(oracle::norm2(make_sparse_reservoir(10, 2, 0.9, 4.0, 3)) == doctest::Approx(0.225).epsilon(1e-9));
}

TEST_CASE("input scaling") {
  MatrixXd u = input_scaling(1.0, MatrixXd::Identity(3, 3), 10, 21);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(u.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u.squaredNorm() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(input_scaling(0.0, MatrixXd::Identity(2, 2), 5, 1).isZero(0.0));
  const MatrixXd cov = Eigen::Vector2d(4, 1).asDiagonal();
  u = input_scaling(1.0, cov, 12, 22);
  for (Eigen::Index i = 0; i < 12; ++i)
    CHECK(std::abs(u.row(i) * cov * u.row(i).transpose() - 1.0) <= 1e-10);
  // Singular covariance: rows live where the inputs have variance.
  MatrixXd sing = MatrixXd::Zero(2, 2);
  sing(0, 0) = 2.0;
  u = input_scaling(0.5, sing, 6, 23);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(u.row(i) * sing * u.row(i).transpose() - 0.5) <= 1e-10);
  CHECK_THROWS_AS(input_scaling(1.0, -MatrixXd::Identity(2, 2), 3, 0), DomainError);
}

TEST_CASE("design pipeline closes on the target radius") {
  for (double h : {5.0, 20.0, 100.0}) {
    for (double leak : {0.3, 0.8, 1.0}) {
      const double r = target_radius({h, std::nullopt});
      if (r <= 1 - leak) continue;
      const auto g = gamma_for_radius(r, leak, 1.0, 1.0);
      REQUIRE_FALSE(g.clipped);
      const MatrixXd w = make_normal_reservoir(6, {{g.gamma, 0.0}, {g.gamma, 1.0}, {0.5 * g.gamma, 2.0}, {0.3, 0.0}}, 7);
      ReservoirParams p{w, MatrixXd::Ones(6, 1), VectorXd::Zero(6), leak, Activation::tanh()};
      const auto lti = jacobians_at(p, VectorXd::Zero(6), VectorXd::Zero(1), Readout{MatrixXd::Identity(6, 6), VectorXd::Zero(6)});
      CHECK(linalg::spectral_radius(lti.A) == doctest::Approx(r).epsilon(1e-6));
      CHECK(certify_lipschitz(p).verdict == Verdict::Pass);
    }
  }
}

}  // TEST_SUITE
