#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace esnssm {

using Eigen::MatrixXd;

/// Either a horizon H (r* = e^{−1/H}) or a half-life (r* = 2^{−1/H½}).
struct MemoryTarget {
  std::optional<double> horizon;
  std::optional<double> half_life;
};

double target_radius(const MemoryTarget& target);

struct GammaChoice {
  double gamma = 0.0;
  bool clipped = false;
};

/// γ = (r* − (1−λ))/(λs), clipped into (1e-9, 1/L_σ − 1e-9).
GammaChoice gamma_for_radius(double target, double leak, double slope, double L_sigma);

/// One spectral block: a real pole r (angle 0 or π) takes one dimension, a
/// conjugate pair r·e^{±jθ} takes two.
struct PoleSpec {
  double radius = 0.5;
  double angle = 0.0;
};

/// Real normal matrix QᵀΛQ with the requested poles, Q a seeded random
/// orthogonal matrix.
MatrixXd make_normal_reservoir(Eigen::Index n, const std::vector<PoleSpec>& poles, std::uint64_t seed);

/// k nonzeros per row at seeded random columns with Gaussian values,
/// rescaled so ‖W‖₂ = η/L_σ.
MatrixXd make_sparse_reservoir(Eigen::Index n, Eigen::Index nnz_per_row, double eta, double L_sigma,
                               std::uint64_t seed);

/// Seeded Gaussian rows rᵢ scaled so rᵢᵀ Σ_u rᵢ = target for every row.
MatrixXd input_scaling(double target_preact_var, const MatrixXd& input_cov, Eigen::Index n, std::uint64_t seed);

/// Log-uniform radii tiling [r_min, r_max), one per dimension, all real.
std::vector<PoleSpec> log_uniform_poles(Eigen::Index n, double r_min, double r_max);

}  // namespace esnssm
