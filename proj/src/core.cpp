#include "esnssm/core.hpp"

#include <string>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"
#include "esnssm/random.hpp"

namespace esnssm {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void ReservoirParams::validate() const {
  if (W.rows() == 0 || W.rows() != W.cols())
    throw DomainError("dimension_mismatch", "W must be square and non-empty, got " +
                                                dims(W.rows(), W.cols()));
  if (U.rows() != W.rows())
    throw DomainError("dimension_mismatch", "U must have n = " + std::to_string(W.rows()) +
                                                " rows, got " + dims(U.rows(), U.cols()));
  if (b.size() != W.rows())
    throw DomainError("dimension_mismatch", "b must have length n = " + std::to_string(W.rows()));
  if (!(leak > 0.0 && leak <= 1.0))
    throw DomainError("invalid_leak", "leak must lie in (0, 1], got " + std::to_string(leak));
  if (!W.allFinite() || !U.allFinite() || !b.allFinite())
    throw DomainError("non_finite_parameter", "reservoir parameters contain non-finite entries");
}

void Readout::validate(Eigen::Index n) const {
  if (C.cols() != n)
    throw DomainError("dimension_mismatch", "readout C must have n = " + std::to_string(n) +
                                                " columns, got " + dims(C.rows(), C.cols()));
  if (d.size() != C.rows())
    throw DomainError("dimension_mismatch", "readout d must have length p = " +
                                                std::to_string(C.rows()));
  if (!C.allFinite() || !d.allFinite())
    throw DomainError("non_finite_parameter", "readout contains non-finite entries");
}

VectorXd reservoir_step(const ReservoirParams& p, const VectorXd& x, const VectorXd& u) {
  if (x.size() != p.n() || u.size() != p.m())
    throw DomainError("dimension_mismatch",
                      "reservoir_step expects x in R^" + std::to_string(p.n()) + " and u in R^" +
                          std::to_string(p.m()));
  const VectorXd xi = p.W * x + p.U * u + p.b;
  VectorXd next(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    next(i) = (1.0 - p.leak) * x(i) + p.leak * p.activation.value(xi(i));
  return next;
}

Trajectory simulate(const ReservoirParams& p, const std::optional<Readout>& readout,
                    const VectorXd& x0, const std::vector<VectorXd>& inputs,
                    const SimulationNoise& noise) {
  p.validate();
  if (x0.size() != p.n())
    throw DomainError("dimension_mismatch", "x0 must have length n = " + std::to_string(p.n()));
  if (readout) readout->validate(p.n());

  MatrixXd process_chol, measurement_chol;
  if (noise.Q) {
    if (noise.Q->rows() != p.n() || noise.Q->cols() != p.n())
      throw DomainError("dimension_mismatch", "process covariance Q must be n x n");
    linalg::require_psd(*noise.Q, "process covariance Q");
    process_chol = linalg::cholesky_with_jitter(*noise.Q);
  }
  const bool measure_noise = readout && noise.R;
  if (measure_noise) {
    if (noise.R->rows() != readout->p() || noise.R->cols() != readout->p())
      throw DomainError("dimension_mismatch", "measurement covariance R must be p x p");
    linalg::require_psd(*noise.R, "measurement covariance R");
    measurement_chol = linalg::cholesky_with_jitter(*noise.R);
  }

  CounterRng process_rng(noise.seed, 0);
  CounterRng measurement_rng(noise.seed, 1);

  Trajectory traj;
  traj.inputs = inputs;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(x0);
  if (readout) traj.outputs.reserve(inputs.size());

  VectorXd x = x0;
  for (const auto& u : inputs) {
    x = reservoir_step(p, x, u);
    if (noise.Q) x += process_chol * process_rng.normal_vector(p.n());
    traj.states.push_back(x);
    if (readout) {
      VectorXd y = readout->C * x + readout->d;
      if (measure_noise) y += measurement_chol * measurement_rng.normal_vector(readout->p());
      traj.outputs.push_back(std::move(y));
    }
  }
  return traj;
}

}  // namespace esnssm
