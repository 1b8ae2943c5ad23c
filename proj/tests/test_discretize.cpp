#include "doctest.h"

#include "esnssm/discretize.hpp"
#include "esnssm/error.hpp"
#include "support.hpp"

using namespace esnssm;

namespace {

MatrixXd hurwitz(CounterRng& rng, Eigen::Index n) {
  MatrixXd a = rng.normal_matrix(n, n);
  const double shift = Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues().real().maxCoeff();
  return a - (shift + 0.2 + rng.uniform()) * MatrixXd::Identity(n, n);
}

// ∫₀^h e^{Aτ} B dτ and ∫₀^h e^{Aτ} Q e^{Aᵀτ} dτ by composite Simpson on the
// Taylor exponential.
std::pair<MatrixXd, MatrixXd> quadrature_integrals(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                                                   double h, int panels = 400) {
  MatrixXd ib = MatrixXd::Zero(b.rows(), b.cols()), iq = MatrixXd::Zero(q.rows(), q.cols());
  for (int i = 0; i <= 2 * panels; ++i) {
    const double tau = h * i / (2.0 * panels);
    const double w = (i == 0 || i == 2 * panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const MatrixXd e = oracle::taylor_expm(a * tau);
    ib += w * e * b;
    iq += w * e * q * e.transpose();
  }
  const double f = h / (6.0 * panels);
  return {f * ib, f * iq};
}

}  // namespace

TEST_SUITE("discretize") {

TEST_CASE("Euler leak") {
  CHECK(euler_leak(0.1, 1.0) == doctest::Approx(0.1));
  CHECK(euler_leak(1.0, 1.0) == 1.0);
  try {
    euler_leak(2.0, 1.0);
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(e.code() == "invalid_leak");
    CHECK(std::string(e.what()).find("(0,1]") != std::string::npos);
  }
  CHECK_THROWS_AS(euler_leak(-1.0, 1.0), DomainError);
}

TEST_CASE("Tustin leak") {
  CHECK(tustin_leak(1.0, 1.0).leak == 2.0 / 3.0);
  CHECK_FALSE(tustin_leak(1.0, 1.0).exceeds_unit);
  CHECK(std::abs(tustin_leak(1e-4, 1.0).leak - euler_leak(1e-4, 1.0)) <= 1e-8);
  CHECK(tustin_leak(0.2, 1.0).leak == doctest::Approx(0.2 / 1.1).epsilon(1e-15));
  CHECK(tustin_leak(3.0, 1.0).exceeds_unit);
  for (double r : {1e-3, 1e-2, 0.1}) {
    const double ratio = tustin_leak(r, 1.0).leak / euler_leak(r, 1.0);
    CHECK(std::abs(1 - ratio) <= r / 2);
  }
}

TEST_CASE("continuous-time Jacobians") {
  CounterRng rng(51);
  ReservoirParams p{MatrixXd::Zero(3, 3), rng.normal_matrix(3, 1), rng.normal_vector(3), 0.5, Activation::tanh()};
  auto ct = ct_jacobians(p, 2.0, rng.normal_vector(3), rng.normal_vector(1));
  CHECK(oracle::max_abs(ct.A_c + 0.5 * MatrixXd::Identity(3, 3)) <= 1e-15);

  p.W = rng.normal_matrix(3, 3);
  p.activation = Activation::identity();
  ct = ct_jacobians(p, 2.0, rng.normal_vector(3), rng.normal_vector(1));
  CHECK(oracle::max_abs(ct.A_c - (p.W - MatrixXd::Identity(3, 3)) / 2.0) <= 1e-15);

  // Saturation, against finite differences of the vector field (−x + σ(ξ))/τ.
  p.activation = Activation::tanh();
  p.W *= 0.01;
  p.b = VectorXd::Constant(3, 12.0);
  const VectorXd xb = VectorXd::Zero(3), ub = VectorXd::Zero(1);
  ct = ct_jacobians(p, 2.0, xb, ub);
  auto field = [&](const VectorXd& x) {
    return VectorXd((-x + (p.W * x + p.U * ub + p.b).array().tanh().matrix()) / 2.0);
  };
  CHECK(oracle::max_abs(ct.A_c - oracle::fd_jacobian(field, xb)) <= 1e-8);
  CHECK(oracle::max_abs(ct.A_c + 0.5 * MatrixXd::Identity(3, 3)) <= 1e-9);
  CHECK(oracle::max_abs(ct.B_c) <= 1e-9);
}

TEST_CASE("ZOH scalar closed form") {
  const double tau = 0.7, dt = 0.3, b = 1.7;
  CtLinearModel ct{MatrixXd::Constant(1, 1, -1 / tau), MatrixXd::Constant(1, 1, b), MatrixXd::Zero(1, 1), tau, dt};
  const auto d = zoh_discretize(ct);
  CHECK(d.A_d(0, 0) == doctest::Approx(std::exp(-dt / tau)).epsilon(1e-14));
  CHECK(d.B_d(0, 0) == doctest::Approx(tau * (1 - std::exp(-dt / tau)) * b).epsilon(1e-14));
}

TEST_CASE("ZOH with zero dynamics") {
  CounterRng rng(52);
  const MatrixXd g = rng.normal_matrix(3, 3);
  CtLinearModel ct{MatrixXd::Zero(3, 3), rng.normal_matrix(3, 2), g * g.transpose(), 1.0, 0.25};
  const auto d = zoh_discretize(ct);
  CHECK(d.A_d == MatrixXd::Identity(3, 3));
  CHECK(oracle::max_abs(d.B_d - 0.25 * ct.B_c) <= 1e-15);
  CHECK(oracle::max_abs(d.Q_d - 0.25 * ct.Q_c) <= 1e-14);
}

TEST_CASE("ZOH integrals against quadrature") {
  CounterRng rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const MatrixXd g = rng.normal_matrix(n, n);
    CtLinearModel ct{hurwitz(rng, n), rng.normal_matrix(n, 2), g * g.transpose(), 1.0, 0.4};
    const auto d = zoh_discretize(ct);
    const auto [ib, iq] = quadrature_integrals(ct.A_c, ct.B_c, ct.Q_c, ct.dt);
    CHECK(oracle::max_abs(d.A_d - oracle::taylor_expm(ct.A_c * ct.dt)) <= 1e-13);
    CHECK(oracle::max_abs(d.B_d - ib) <= 1e-10);
    CHECK(oracle::max_abs(d.Q_d - iq) <= 1e-10);
    CHECK(d.Q_d == d.Q_d.transpose());
  }
}

TEST_CASE("ZOH semigroup and eigenvalue mapping") {
  CounterRng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd a = hurwitz(rng, 4);
    CtLinearModel ct{a, rng.normal_matrix(4, 1), MatrixXd(), 1.0, 0.3};
    const MatrixXd a1 = zoh_discretize(ct).A_d;
    ct.dt = 0.6;
    const MatrixXd a2 = zoh_discretize(ct).A_d;
    CHECK(oracle::max_abs(a1 * a1 - a2) <= 1e-10);
    const Eigen::VectorXcd ec = Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues();
    const Eigen::VectorXcd ed = Eigen::EigenSolver<MatrixXd>(a2, false).eigenvalues();
    for (Eigen::Index i = 0; i < ec.size(); ++i) {
      const std::complex<double> mapped = std::exp(ec(i) * 0.6);
      double best = 1e9;
      for (Eigen::Index j = 0; j < ed.size(); ++j) best = std::min(best, std::abs(ed(j) - mapped));
      CHECK(best <= 1e-8);
    }
    CHECK(ed.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("Euler gap shrinks fourfold per halving") {
  CounterRng rng(55);
  const MatrixXd a = hurwitz(rng, 3);
  double prev = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double dt = 0.1 / std::pow(2.0, k);
    CtLinearModel ct{a, MatrixXd::Zero(3, 1), MatrixXd(), 1.0, dt};
    const double gap = (zoh_discretize(ct).A_d - (MatrixXd::Identity(3, 3) + dt * a)).norm();
    if (k > 0) CHECK(prev / gap == doctest::Approx(4.0).epsilon(0.1));
    prev = gap;
  }
}

TEST_CASE("Euler contraction factor") {
  CounterRng rng(56);
  MatrixXd w = rng.normal_matrix(3, 3);
  w *= 0.6 / oracle::norm2(w);
  for (double dt : {0.05, 0.2, 0.5}) {
    const double lam = euler_leak(dt, 1.0);
    ReservoirParams p{w, MatrixXd::Zero(3, 1), VectorXd::Zero(3), lam, Activation::tanh()};
    const double kappa = (1 - lam) + lam * oracle::norm2(w);
    CHECK(kappa == doctest::Approx(1 - dt * (1 - 0.6)).epsilon(1e-12));
    CHECK(kappa < 1);
  }
}

TEST_CASE("ill-conditioned requests are refused") {
  CtLinearModel ct{MatrixXd::Constant(1, 1, -1.0), MatrixXd::Constant(1, 1, 1.0), MatrixXd(), 1.0, 2e3};
  CHECK_THROWS_AS(zoh_discretize(ct), DomainError);
  ct.dt = -1.0;
  CHECK_THROWS_AS(zoh_discretize(ct), DomainError);
}

}  // TEST_SUITE
