#include "esnssm/lift.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"
#include "esnssm/random.hpp"

namespace esnssm {

Dictionary Dictionary::identity_plus_constant(Eigen::Index n) {
  if (n < 1) throw DomainError("invalid_argument", "dictionary state dimension must be >= 1");
  Dictionary d;
  d.kind_ = Kind::IdentityPlusConstant;
  d.n_ = n;
  return d;
}

Dictionary Dictionary::monomials(Eigen::Index n, int max_degree) {
  if (max_degree < 1) throw DomainError("invalid_argument", "monomial degree must be >= 1");
  Dictionary d = identity_plus_constant(n);
  d.kind_ = Kind::Monomials;
  d.degree_ = max_degree;
  std::vector<int> exps(static_cast<std::size_t>(n), 0);
  // Enumerate exponent vectors of exactly `deg` total degree, lexicographic.
  std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index i, int left) {
    if (i == n - 1) {
      exps[static_cast<std::size_t>(i)] = left;
      d.exponents_.push_back(exps);
      return;
    }
    for (int e = left; e >= 0; --e) {
      exps[static_cast<std::size_t>(i)] = e;
      rec(i + 1, left - e);
    }
  };
  for (int deg = 2; deg <= max_degree; ++deg) rec(0, deg);
  return d;
}

Dictionary Dictionary::random_fourier(Eigen::Index n, int count, double bandwidth, std::uint64_t seed) {
  if (count < 1) throw DomainError("invalid_argument", "random Fourier feature count must be >= 1");
  if (!(bandwidth > 0.0)) throw DomainError("invalid_argument", "bandwidth must be positive");
  Dictionary d = identity_plus_constant(n);
  d.kind_ = Kind::RandomFourier;
  d.count_ = count;
  d.bandwidth_ = bandwidth;
  d.seed_ = seed;
  CounterRng rng(seed);
  d.omega_ = rng.normal_matrix(count, n) / bandwidth;
  d.phase_.resize(count);
  for (int i = 0; i < count; ++i) d.phase_(i) = 2.0 * std::numbers::pi * rng.uniform();
  return d;
}

Eigen::Index Dictionary::output_dim() const {
  const Eigen::Index base = 1 + n_;
  switch (kind_) {
    case Kind::IdentityPlusConstant:
      return base;
    case Kind::Monomials:
      return base + static_cast<Eigen::Index>(exponents_.size());
    case Kind::RandomFourier:
      return base + count_;
  }
  return base;
}

VectorXd Dictionary::eval(const VectorXd& x) const {
  if (x.size() != n_)
    throw DomainError("dimension_mismatch", "dictionary expects x in R^" + std::to_string(n_));
  if (!x.allFinite()) throw DomainError("non_finite_input", "dictionary input is not finite");
  VectorXd z(output_dim());
  z(0) = 1.0;
  z.segment(1, n_) = x;
  Eigen::Index k = 1 + n_;
  if (kind_ == Kind::Monomials) {
    for (const auto& e : exponents_) {
      double v = 1.0;
      for (Eigen::Index i = 0; i < n_; ++i)
        for (int r = 0; r < e[static_cast<std::size_t>(i)]; ++r) v *= x(i);
      z(k++) = v;
    }
  } else if (kind_ == Kind::RandomFourier) {
    const double scale = std::sqrt(2.0 / count_);
    const VectorXd arg = omega_ * x + phase_;
    for (int i = 0; i < count_; ++i) z(k++) = scale * std::cos(arg(i));
  }
  return z;
}

double LiftedModel::dynamic_radius() const {
  const Eigen::Index nn = A.rows();
  if (nn <= 1) return 0.0;
  return linalg::spectral_radius(A.bottomRightCorner(nn - 1, nn - 1));
}

LiftedModel edmd_fit(const ReservoirParams& p, const std::vector<Trajectory>& data, const Dictionary& dict,
                     double ridge, const std::optional<Readout>& readout) {
  p.validate();
  if (!(ridge >= 0.0)) throw DomainError("invalid_argument", "ridge must be >= 0");
  if (dict.state_dim() != p.n())
    throw DomainError("dimension_mismatch", "dictionary state dimension differs from the reservoir");
  const Eigen::Index big_n = dict.output_dim();
  const Eigen::Index m = p.m();
  const Eigen::Index cols = big_n + m;

  std::size_t snapshots = 0;
  for (const auto& traj : data) {
    if (traj.states.size() != traj.inputs.size() + 1)
      throw DomainError("length_mismatch", "trajectory needs states.size() == inputs.size() + 1");
    snapshots += traj.inputs.size();
  }
  if (snapshots < static_cast<std::size_t>(big_n + m + 1))
    throw DomainError("insufficient_data", "EDMD needs at least N + m + 1 = " + std::to_string(big_n + m + 1) +
                                               " snapshots, got " + std::to_string(snapshots));

  const Eigen::Index penalized = ridge > 0.0 ? cols - 1 : 0;
  const Eigen::Index rows = static_cast<Eigen::Index>(snapshots) + penalized;
  MatrixXd regress = MatrixXd::Zero(rows, cols);
  MatrixXd target = MatrixXd::Zero(rows, big_n - 1);
  std::vector<VectorXd> phi_next;
  phi_next.reserve(snapshots);
  Eigen::Index r = 0;
  for (const auto& traj : data) {
    for (std::size_t t = 0; t < traj.inputs.size(); ++t, ++r) {
      regress.row(r).head(big_n) = dict.eval(traj.states[t]).transpose();
      regress.row(r).tail(m) = traj.inputs[t].transpose();
      const VectorXd next = dict.eval(reservoir_step(p, traj.states[t], traj.inputs[t]));
      target.row(r) = next.tail(big_n - 1).transpose();
      phi_next.push_back(next);
    }
  }
  // Ridge as augmented rows √ridge·e_j for every column but the constant.
  for (Eigen::Index j = 0; j < penalized; ++j) regress(r + j, j + 1) = std::sqrt(ridge);

  Eigen::ColPivHouseholderQR<MatrixXd> qr(regress);
  qr.setThreshold(1e-13);
  if (ridge == 0.0 && qr.rank() < cols)
    throw DomainError("rank_deficient", "EDMD normal equations are rank deficient (rank " + std::to_string(qr.rank()) +
                                            " < " + std::to_string(cols) + "); use ridge > 0");
  const MatrixXd coef = qr.solve(target);  // cols × (N−1)

  LiftedModel lm{dict, MatrixXd::Zero(big_n, big_n), MatrixXd::Zero(big_n, m), VectorXd::Zero(big_n),
                 MatrixXd(), 0.0, 0.0, ridge, snapshots};
  lm.A(0, 0) = 1.0;
  lm.A.bottomRows(big_n - 1) = coef.topRows(big_n).transpose();
  lm.B.bottomRows(big_n - 1) = coef.bottomRows(m).transpose();

  double max_res = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < snapshots; ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    const VectorXd z = regress.row(row).head(big_n).transpose();
    const VectorXd u = regress.row(row).tail(m).transpose();
    const double e = (phi_next[s] - (lm.A * z + lm.B * u + lm.c)).norm();
    max_res = std::max(max_res, e);
    sum_sq += e * e;
  }
  lm.epsilon = max_res;
  lm.rms_residual = std::sqrt(sum_sq / static_cast<double>(snapshots));

  const Eigen::Index n = p.n();
  if (readout) {
    readout->validate(n);
    lm.C = MatrixXd::Zero(readout->p(), big_n);
    lm.C.col(0) = readout->d;
    lm.C.middleCols(1, n) = readout->C;
  } else {
    lm.C = MatrixXd::Zero(n, big_n);
    lm.C.middleCols(1, n) = MatrixXd::Identity(n, n);
  }
  return lm;
}

RolloutError lifted_rollout_error(const LiftedModel& lm, const ReservoirParams& p, const Trajectory& traj,
                                  std::size_t horizon) {
  if (traj.states.empty()) throw DomainError("length_mismatch", "trajectory has no initial state");
  if (horizon > traj.inputs.size())
    throw DomainError("length_mismatch", "rollout horizon exceeds the trajectory length");
  RolloutError out;
  out.radius = lm.dynamic_radius();
  out.bound_valid = out.radius < 1.0;
  VectorXd x = traj.states.front();
  VectorXd z = lm.dict.eval(x);
  double geometric = 0.0;  // Σ_{j<t} ρʲ
  double power = 1.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    z = lm.A * z + lm.B * traj.inputs[t] + lm.c;
    x = reservoir_step(p, x, traj.inputs[t]);
    geometric += power;
    power *= out.radius;
    const double d = (z - lm.dict.eval(x)).norm();
    const double b = lm.epsilon * geometric;
    out.discrepancy.push_back(d);
    out.bound.push_back(b);
    if (d > b) ++out.violations;
  }
  return out;
}

Certificate rf_smallgain(double leak, double v_norm, double phi_lipschitz, double w_norm) {
  if (!(leak > 0.0 && leak <= 1.0)) throw DomainError("invalid_leak", "leak must lie in (0, 1]");
  if (!(v_norm >= 0.0) || !(phi_lipschitz >= 0.0) || !(w_norm >= 0.0))
    throw DomainError("invalid_argument", "norms must be >= 0");
  Certificate c;
  c.method = CertificateMethod::LipschitzC1;
  c.kappa = (1.0 - leak) + leak * v_norm * phi_lipschitz * w_norm;
  c.margin = 1.0 - c.kappa;
  c.verdict = c.kappa < 1.0 ? Verdict::Pass : Verdict::Fail;
  return c;
}

}  // namespace esnssm
