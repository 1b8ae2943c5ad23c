#include "esnssm/design.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"
#include "esnssm/random.hpp"

namespace esnssm {

double target_radius(const MemoryTarget& target) {
  if (target.horizon.has_value() == target.half_life.has_value())
    throw DomainError("invalid_argument", "give exactly one of horizon or half_life");
  if (target.horizon) {
    if (!(*target.horizon > 0.0)) throw DomainError("invalid_argument", "horizon must be positive");
    return std::exp(-1.0 / *target.horizon);
  }
  if (!(*target.half_life > 0.0)) throw DomainError("invalid_argument", "half_life must be positive");
  return std::exp2(-1.0 / *target.half_life);
}

GammaChoice gamma_for_radius(double target, double leak, double slope, double L_sigma) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("invalid_argument", "target radius must lie in (0, 1)");
  if (!(leak > 0.0 && leak <= 1.0)) throw DomainError("invalid_leak", "leak must lie in (0, 1]");
  if (!(slope > 0.0) || !(L_sigma > 0.0)) throw DomainError("invalid_argument", "slope and L_sigma must be positive");
  if (target <= 1.0 - leak)
    throw DomainError("unreachable_target", "target unreachable at this leak: r* <= 1 - leak");
  GammaChoice g{(target - (1.0 - leak)) / (leak * slope), false};
  const double lo = 1e-9;
  const double hi = 1.0 / L_sigma - 1e-9;
  if (g.gamma < lo || g.gamma > hi) {
    g.gamma = std::clamp(g.gamma, lo, hi);
    g.clipped = true;
  }
  return g;
}

namespace {

// QR of a seeded Gaussian matrix with the sign of R's diagonal folded into Q.
MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng(seed, 7);
  const MatrixXd g = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

bool is_real_pole(const PoleSpec& pole) {
  const double a = std::fmod(std::abs(pole.angle), 2.0 * std::numbers::pi);
  return a == 0.0 || a == std::numbers::pi;
}

}  // namespace

MatrixXd make_normal_reservoir(Eigen::Index n, const std::vector<PoleSpec>& poles, std::uint64_t seed) {
  if (n < 1) throw DomainError("invalid_argument", "reservoir size must be >= 1");
  Eigen::Index used = 0;
  for (const auto& pole : poles) {
    if (!(pole.radius > 0.0 && pole.radius < 1.0))
      throw DomainError("invalid_argument", "pole radii must lie in (0, 1)");
    used += is_real_pole(pole) ? 1 : 2;
  }
  if (used != n)
    throw DomainError("dimension_mismatch", "pole blocks use " + std::to_string(used) + " dimensions, n = " +
                                                std::to_string(n));
  MatrixXd blocks = MatrixXd::Zero(n, n);
  Eigen::Index k = 0;
  for (const auto& pole : poles) {
    if (is_real_pole(pole)) {
      blocks(k, k) = pole.radius * std::cos(pole.angle);
      ++k;
    } else {
      const double c = pole.radius * std::cos(pole.angle);
      const double s = pole.radius * std::sin(pole.angle);
      blocks.block(k, k, 2, 2) << c, -s, s, c;
      k += 2;
    }
  }
  const MatrixXd q = random_orthogonal(n, seed);
  return q.transpose() * blocks * q;
}

MatrixXd make_sparse_reservoir(Eigen::Index n, Eigen::Index nnz_per_row, double eta, double L_sigma,
                               std::uint64_t seed) {
  if (n < 1) throw DomainError("invalid_argument", "reservoir size must be >= 1");
  if (nnz_per_row < 1 || nnz_per_row > n) throw DomainError("invalid_argument", "need 1 <= k <= n");
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("invalid_argument", "eta must lie in (0, 1)");
  if (!(L_sigma > 0.0)) throw DomainError("invalid_argument", "L_sigma must be positive");
  CounterRng rng(seed, 11);
  MatrixXd w = MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = j;
    // Partial Fisher–Yates: the first k entries are the chosen columns.
    for (Eigen::Index j = 0; j < nnz_per_row; ++j) {
      const auto pick = j + static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n - j));
      std::swap(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(pick)]);
      w(i, cols[static_cast<std::size_t>(j)]) = rng.normal();
    }
  }
  const double norm = linalg::spectral_norm(w);
  if (norm == 0.0) throw DomainError("degenerate", "generated reservoir is zero");
  return w * (eta / L_sigma / norm);
}

MatrixXd input_scaling(double target_preact_var, const MatrixXd& input_cov, Eigen::Index n, std::uint64_t seed) {
  if (!(target_preact_var >= 0.0)) throw DomainError("invalid_argument", "target variance must be >= 0");
  if (n < 1) throw DomainError("invalid_argument", "reservoir size must be >= 1");
  linalg::require_psd(input_cov, "input covariance");
  const Eigen::Index m = input_cov.rows();
  CounterRng rng(seed, 13);
  MatrixXd u = rng.normal_matrix(n, m);
  if (target_preact_var == 0.0) return MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    double var = u.row(i) * input_cov * u.row(i).transpose();
    // A row in the null space of a singular covariance cannot be scaled.
    for (int retry = 0; var <= 1e-300 && retry < 64; ++retry) {
      u.row(i) = rng.normal_vector(m).transpose();
      var = u.row(i) * input_cov * u.row(i).transpose();
    }
    if (var <= 1e-300) throw DomainError("degenerate", "input covariance is zero");
    u.row(i) *= std::sqrt(target_preact_var / var);
  }
  return u;
}

std::vector<PoleSpec> log_uniform_poles(Eigen::Index n, double r_min, double r_max) {
  if (!(r_min > 0.0 && r_min <= r_max && r_max < 1.0))
    throw DomainError("invalid_argument", "need 0 < r_min <= r_max < 1");
  std::vector<PoleSpec> poles;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n);
    poles.push_back({r_min * std::pow(r_max / r_min, frac), 0.0});
  }
  return poles;
}

}  // namespace esnssm
