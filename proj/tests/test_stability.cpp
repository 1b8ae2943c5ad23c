#include "doctest.h"

#include "esnssm/error.hpp"
#include "esnssm/stability.hpp"
#include "support.hpp"

using namespace esnssm;

namespace {

ReservoirParams with_norm(MatrixXd w, double norm, double leak, Activation act = Activation::tanh()) {
  w *= norm / oracle::norm2(w);
  const auto n = w.rows();
  return ReservoirParams{w, MatrixXd::Identity(n, 1), VectorXd::Zero(n), leak, act};
}

// Largest eigenvalue of MᵀPM − κ²P over every slope corner.
double worst_vertex_gap(const ReservoirParams& p, const MatrixXd& P, double kappa) {
  const auto n = p.n();
  double worst = -1e300;
  for (long mask = 0; mask < (1L << n); ++mask) {
    VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = (mask >> i) & 1 ? p.activation.lipschitz() : 0.0;
    const MatrixXd m = (1 - p.leak) * MatrixXd::Identity(n, n) + p.leak * d.asDiagonal() * p.W;
    const MatrixXd g = m.transpose() * P * m - kappa * kappa * P;
    worst = std::max(worst, Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (g + g.transpose())).eigenvalues().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_SUITE("stability") {

TEST_CASE("Lipschitz certificate examples") {
  CounterRng rng(21);
  auto c = certify_lipschitz(with_norm(rng.normal_matrix(3, 3), 0.9, 1.0));
  CHECK(c.kappa == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(c.verdict == Verdict::Pass);
  CHECK(c.method == CertificateMethod::LipschitzC1);
  CHECK_FALSE(c.weight_P.has_value());

  c = certify_lipschitz(with_norm(rng.normal_matrix(3, 3), 1.5, 0.5));
  CHECK(c.kappa == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(c.verdict == Verdict::Fail);

  // Exactly on the boundary: ‖I‖ = 1 is computed without iteration error.
  c = certify_lipschitz(ReservoirParams{MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), VectorXd::Zero(2), 0.5,
                                        Activation::tanh()});
  CHECK(c.kappa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.verdict == Verdict::Fail);
  CHECK(c.margin == doctest::Approx(1 - c.kappa));
}

TEST_CASE("Lipschitz kappa is monotone in the norm and in the slope bound") {
  CounterRng rng(22);
  const MatrixXd w = rng.normal_matrix(5, 5);
  double prev = -1;
  for (double s : {0.1, 0.4, 0.8, 1.2, 2.0}) {
    const double k = certify_lipschitz(with_norm(w, s, 0.6)).kappa;
    CHECK(k > prev);
    prev = k;
  }
  const double k1 = certify_lipschitz(with_norm(w, 0.5, 0.6, Activation::leaky_slope(1.0))).kappa;
  const double k2 = certify_lipschitz(with_norm(w, 0.5, 0.6, Activation::leaky_slope(1.5))).kappa;
  CHECK(k2 > k1);
}

TEST_CASE("weighted certificate: scaled identity") {
  const ReservoirParams p{0.8 * MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 1), VectorXd::Zero(3), 1.0,
                          Activation::identity()};
  const auto c = certify_weighted(p, 4096);
  CHECK(c.verdict == Verdict::Pass);
  CHECK(c.kappa <= 0.8 + 1e-6);
  REQUIRE(c.weight_P.has_value());
  CHECK(worst_vertex_gap(p, *c.weight_P, c.kappa) <= 1e-9 * oracle::max_abs(*c.weight_P));
}

TEST_CASE("weighted certificate: pure leak") {
  for (double leak : {0.2, 0.5, 0.9}) {
    const ReservoirParams p{MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 1), VectorXd::Zero(2), leak, Activation::tanh()};
    const auto c = certify_weighted(p, 16);
    CHECK(c.verdict == Verdict::Pass);
    CHECK(c.kappa == doctest::Approx(1 - leak).epsilon(1e-6));
  }
}

TEST_CASE("weighted certificate beats the Lipschitz test on a non-normal W") {
  MatrixXd w(2, 2);
  w << 0.5, 1.8, 0.0, 0.5;
  const auto p = with_norm(w, 1.9, 0.5);
  const auto c1 = certify_lipschitz(p);
  CHECK(c1.kappa == doctest::Approx(1.45).epsilon(1e-9));
  CHECK(c1.verdict == Verdict::Fail);
  const auto c2 = certify_weighted(p, 4096);
  CHECK(c2.vertices_checked == 4);
  REQUIRE(c2.verdict == Verdict::Pass);
  REQUIRE(c2.weight_P.has_value());
  CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(*c2.weight_P).eigenvalues().minCoeff() > 0);
  // Every corner satisfies MᵀPM ⪯ κ²P.
  CHECK(worst_vertex_gap(p, *c2.weight_P, c2.kappa) <= 1e-9 * oracle::max_abs(*c2.weight_P));
}

TEST_CASE("weighted certificate verdicts agree with an exhaustive vertex check") {
  CounterRng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const auto p = with_norm(rng.normal_matrix(n, n), 0.6 + 1.2 * rng.uniform(), 0.3 + 0.7 * rng.uniform());
    const auto c = certify_weighted(p, 4096);
    if (c.verdict == Verdict::Pass) {
      CHECK(c.kappa < 1.0);
      CHECK(worst_vertex_gap(p, *c.weight_P, c.kappa) <= 1e-8 * oracle::max_abs(*c.weight_P));
    } else {
      CHECK(c.verdict == Verdict::Fail);
      CHECK(c.kappa >= 1.0);
    }
  }
}

TEST_CASE("weighted certificate with a small budget is at best Unknown") {
  CounterRng rng(24);
  const auto p = with_norm(rng.normal_matrix(8, 8), 0.5, 0.7);
  const auto c = certify_weighted(p, 16);
  CHECK(c.verdict == Verdict::Unknown);
  CHECK(c.vertices_checked == 18);
  CHECK(certify_weighted(p, 256).verdict == Verdict::Pass);
}

TEST_CASE("spectral certificate is local") {
  MatrixXd w(2, 2);
  w << 0, 1, 0.25, 0;
  const ReservoirParams p{w, MatrixXd::Zero(2, 1), VectorXd::Zero(2), 1.0, Activation::tanh()};
  const auto c = certify_spectral(p, VectorXd::Zero(2), VectorXd::Zero(1));
  CHECK(c.kappa == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.verdict == Verdict::Pass);
  CHECK(c.method == CertificateMethod::SpectralC3);
}

TEST_CASE("spectral radius and deep stacks") {
  MatrixXd m(2, 2);
  m << 0, 1, 0.25, 0;
  CHECK(spectral_radius(m) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(deep_stack_radius({MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 0.9)}) == doctest::Approx(0.9));
  CHECK(deep_stack_radius({m}) == doctest::Approx(0.5));
  CHECK(deep_stack_radius({MatrixXd::Constant(1, 1, 0.2), m}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(deep_stack_radius({}), DomainError);
}

TEST_CASE("memory horizon examples") {
  CHECK(memory_horizon(0.9, 1.0, 100.0, 1.0).horizon == 44);
  CHECK(memory_horizon(0.9, 1.0, 0.5, 1.0).horizon == 0);
  CHECK(memory_horizon(0.9, 1.0, 1.0, 1.0).horizon == 0);
  CHECK(memory_horizon(0.5, 2.0, 1.0, 1.0).horizon == 1);
  try {
    memory_horizon(1.0, 1.0, 1.0, 0.1);
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(e.code() == "no_certificate");
  }
}

TEST_CASE("best certificate prefers global passes") {
  Certificate c1{CertificateMethod::LipschitzC1, 0.95, 0.05, Verdict::Pass, std::nullopt, 0};
  Certificate c2{CertificateMethod::WeightedC2, 0.8, 0.2, Verdict::Pass, MatrixXd::Identity(1, 1), 2};
  Certificate c3{CertificateMethod::SpectralC3, 0.5, 0.5, Verdict::Pass, std::nullopt, 0};
  CHECK(best_certificate({c1, c2, c3}).method == CertificateMethod::WeightedC2);
  c2.verdict = Verdict::Unknown;
  CHECK(best_certificate({c1, c2, c3}).method == CertificateMethod::LipschitzC1);
  c1.verdict = Verdict::Fail;
  c1.kappa = 1.2;
  CHECK(best_certificate({c1, c2, c3}).method == CertificateMethod::SpectralC3);
}

TEST_CASE("property: certified contraction in the certificate norm") {
  CounterRng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const auto p = with_norm(rng.normal_matrix(n, n), 0.5 + 0.9 * rng.uniform(), 0.4 + 0.6 * rng.uniform());
    const auto c = certify_weighted(p, 4096);
    if (c.verdict != Verdict::Pass) continue;
    const MatrixXd& P = *c.weight_P;
    auto pn = [&](const VectorXd& v) { return std::sqrt(v.dot(P * v)); };
    VectorXd x = 3 * rng.normal_vector(n), y = 3 * rng.normal_vector(n);
    const double d0 = pn(x - y);
    double kt = 1.0;
    for (int t = 1; t <= 200; ++t) {
      const VectorXd u = VectorXd::Constant(1, 2 * rng.uniform() - 1);
      x = reservoir_step(p, x, u);
      y = reservoir_step(p, y, u);
      kt *= c.kappa;
      const double d = pn(x - y);
      if (d > 1e-13) CHECK(d <= kt * d0 * (1 + 1e-9));
    }
  }
}

TEST_CASE("property: bounded disturbances keep trajectories close") {
  CounterRng rng(26);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = with_norm(rng.normal_matrix(4, 4), 0.7, 0.8);
    const double kappa = certify_lipschitz(p).kappa;
    const double D = 0.05;
    VectorXd x = rng.normal_vector(4), xb = rng.normal_vector(4);
    const double d0 = (x - xb).norm();
    double kt = 1.0;
    for (int t = 1; t <= 200; ++t) {
      const VectorXd u = rng.normal_vector(1);
      VectorXd d = rng.normal_vector(4);
      d *= D / d.norm();
      x = reservoir_step(p, x, u) + d;
      xb = reservoir_step(p, xb, u);
      kt *= kappa;
      CHECK((x - xb).norm() <= D / (1 - kappa) + kt * d0 + 1e-12);
    }
  }
}

}  // TEST_SUITE
