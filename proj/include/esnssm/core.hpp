#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/activation.hpp"

namespace esnssm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Fixed ESN core: x⁺ = (1−λ)x + λσ(Wx + Uu + b).
struct ReservoirParams {
  MatrixXd W;  // n×n
  MatrixXd U;  // n×m
  VectorXd b;  // n
  double leak = 1.0;
  Activation activation = Activation::tanh();

  Eigen::Index n() const { return W.rows(); }
  Eigen::Index m() const { return U.cols(); }

  /// Dimensions consistent, λ ∈ (0, 1], all entries finite.
  void validate() const;
};

/// y = Cx + d.
struct Readout {
  MatrixXd C;  // p×n
  VectorXd d;  // p

  Eigen::Index p() const { return C.rows(); }
  void validate(Eigen::Index n) const;
};

/// states has inputs.size() + 1 entries (x_0 … x_T). outputs, when present,
/// are aligned with the KF convention: outputs[t] observes states[t + 1].
struct Trajectory {
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs;
  std::vector<VectorXd> outputs;

  std::size_t length() const { return inputs.size(); }
};

/// Optional noise for simulate. Process draws use stream 0 of `seed`,
/// measurement draws stream 1.
struct SimulationNoise {
  std::optional<MatrixXd> Q;  // process, n×n PSD
  std::optional<MatrixXd> R;  // measurement, p×p PSD
  std::uint64_t seed = 0;
};

VectorXd reservoir_step(const ReservoirParams& p, const VectorXd& x, const VectorXd& u);

/// Iterates reservoir_step from x0. Process noise ω_t ~ N(0, Q) is added
/// after each step when Q is given; measurement noise N(0, R) is added to
/// outputs only when both a readout and R are supplied. Reproducible
/// bit-for-bit for a fixed seed.
Trajectory simulate(const ReservoirParams& p, const std::optional<Readout>& readout,
                    const VectorXd& x0, const std::vector<VectorXd>& inputs,
                    const SimulationNoise& noise = {});

}  // namespace esnssm
