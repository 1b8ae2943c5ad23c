#include "esnssm/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"

namespace esnssm {

std::string to_string(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::LipschitzC1:
      return "LipschitzC1";
    case CertificateMethod::SpectralC3:
      return "SpectralC3";
    case CertificateMethod::WeightedC2:
      return "WeightedC2";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "Pass";
    case Verdict::Fail:
      return "Fail";
    case Verdict::Unknown:
      return "Unknown";
  }
  return "?";
}

namespace {

Certificate make_certificate(CertificateMethod method, double kappa) {
  Certificate c;
  c.method = method;
  c.kappa = kappa;
  c.margin = 1.0 - kappa;
  c.verdict = kappa < 1.0 ? Verdict::Pass : Verdict::Fail;
  return c;
}

}  // namespace

Certificate certify_lipschitz(const ReservoirParams& p) {
  p.validate();
  const double kappa =
      (1.0 - p.leak) + p.leak * linalg::spectral_norm(p.W) * p.activation.lipschitz();
  return make_certificate(CertificateMethod::LipschitzC1, kappa);
}

Certificate certify_spectral(const ReservoirParams& p, const VectorXd& x_bar, const VectorXd& u_bar) {
  p.validate();
  if (x_bar.size() != p.n() || u_bar.size() != p.m())
    throw DomainError("dimension_mismatch", "operating point does not match reservoir dimensions");
  const VectorXd xi = p.W * x_bar + p.U * u_bar + p.b;
  const VectorXd slopes = activation_eval(p.activation, xi).derivative;
  const MatrixXd a = (1.0 - p.leak) * MatrixXd::Identity(p.n(), p.n()) + p.leak * slopes.asDiagonal() * p.W;
  return make_certificate(CertificateMethod::SpectralC3, linalg::spectral_radius(a));
}

double input_gain(const ReservoirParams& p) {
  return p.leak * linalg::spectral_norm(p.U) * p.activation.lipschitz();
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("dimension_mismatch", "spectral_radius needs a square matrix");
  return linalg::spectral_radius(a);
}

namespace {

// Slope diagonals to check: every corner of [0, L]ⁿ when affordable,
// otherwise an additive-recurrence (Kronecker) sequence in the box plus the
// two extreme corners.
std::vector<VectorXd> slope_vertices(Eigen::Index n, double lip, std::size_t budget, bool& exhaustive) {
  std::vector<VectorXd> out;
  exhaustive = n < 63 && (std::uint64_t{1} << n) <= budget;
  if (exhaustive) {
    const std::uint64_t count = std::uint64_t{1} << n;
    out.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) d(i) = (mask >> i) & 1U ? lip : 0.0;
      out.push_back(std::move(d));
    }
    return out;
  }
  out.push_back(VectorXd::Zero(n));
  out.push_back(VectorXd::Constant(n, lip));
  // Generalized golden ratio φ_n: the root of x^{n+1} = x + 1.
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / static_cast<double>(n + 1));
  VectorXd alpha(n);
  for (Eigen::Index i = 0; i < n; ++i) alpha(i) = std::fmod(std::pow(1.0 / phi, static_cast<double>(i + 1)), 1.0);
  for (std::size_t k = 1; k <= budget; ++k) {
    VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = lip * std::fmod(0.5 + alpha(i) * static_cast<double>(k), 1.0);
    out.push_back(std::move(d));
  }
  return out;
}

struct WeightedTrial {
  bool solved = false;
  double verified_kappa = std::numeric_limits<double>::infinity();
  MatrixXd P;
};

WeightedTrial try_kappa(const MatrixXd& a_plus, const ReservoirParams& p, const std::vector<VectorXd>& slopes,
                        double kappa) {
  WeightedTrial trial;
  const Eigen::Index n = p.n();
  const MatrixXd scaled = a_plus / kappa;
  if (linalg::spectral_radius(scaled) >= 1.0) return trial;
  // A₊ᵀPA₊ − κ²P = −I  ⇔  P = (A₊/κ)ᵀP(A₊/κ) + I/κ².
  MatrixXd P;
  try {
    P = linalg::solve_discrete_lyapunov(scaled, MatrixXd::Identity(n, n) / (kappa * kappa), true);
  } catch (const DomainError&) {
    return trial;
  }
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) return trial;
  const MatrixXd lt = llt.matrixU();  // Lᵀ, ‖x‖_P = ‖Lᵀx‖
  const MatrixXd lt_inv = lt.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));
  double worst = 0.0;
  const MatrixXd leak_part = (1.0 - p.leak) * MatrixXd::Identity(n, n);
  for (const auto& d : slopes) {
    const MatrixXd m = leak_part + p.leak * d.asDiagonal() * p.W;
    Eigen::JacobiSVD<MatrixXd> svd(lt * m * lt_inv);
    worst = std::max(worst, svd.singularValues()(0));
  }
  trial.solved = true;
  trial.verified_kappa = worst;
  trial.P = std::move(P);
  return trial;
}

}  // namespace

Certificate certify_weighted(const ReservoirParams& p, std::size_t vertex_budget) {
  p.validate();
  if (vertex_budget < 1) throw DomainError("invalid_argument", "vertex_budget must be >= 1");
  const Eigen::Index n = p.n();
  const double lip = p.activation.lipschitz();
  bool exhaustive = false;
  const auto slopes = slope_vertices(n, lip, vertex_budget, exhaustive);
  const MatrixXd a_plus = (1.0 - p.leak) * MatrixXd::Identity(n, n) + p.leak * lip * p.W;

  WeightedTrial best;
  auto consider = [&](WeightedTrial&& t) {
    if (t.solved && t.verified_kappa < best.verified_kappa) best = std::move(t);
  };

  // Bisection on κ over [max(0, 1−λ), 1]; a branch is feasible when the
  // Lyapunov solve succeeds and every checked vertex contracts at that κ
  // (accept tolerance 1e-6).
  double lo = std::max(0.0, 1.0 - p.leak);
  double hi = 1.0;
  constexpr double accept_tol = 1e-6;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    WeightedTrial t = try_kappa(a_plus, p, slopes, mid);
    const bool feasible = t.solved && t.verified_kappa <= mid + accept_tol;
    consider(std::move(t));
    if (feasible)
      hi = mid;
    else
      lo = mid;
  }

  Certificate c;
  c.method = CertificateMethod::WeightedC2;
  c.vertices_checked = slopes.size();
  if (!best.solved) {
    // No admissible P: the all-slopes-maximal vertex is A₊ itself, and
    // ‖A₊‖_P ≥ ρ(A₊) for every P.
    c.kappa = std::max(1.0, linalg::spectral_radius(a_plus));
    c.margin = 1.0 - c.kappa;
    c.verdict = Verdict::Fail;
    return c;
  }
  c.kappa = best.verified_kappa;
  c.margin = 1.0 - c.kappa;
  if (c.kappa >= 1.0)
    c.verdict = Verdict::Fail;
  else
    c.verdict = exhaustive ? Verdict::Pass : Verdict::Unknown;
  c.weight_P = std::move(best.P);
  return c;
}

HorizonEstimate memory_horizon(double kappa, double gain, double amplitude, double tolerance) {
  if (!(kappa < 1.0)) throw DomainError("no_certificate", "no fading-memory certificate: kappa >= 1");
  if (!(kappa > 0.0)) throw DomainError("invalid_argument", "kappa must be positive");
  if (!(gain > 0.0) || !(amplitude > 0.0) || !(tolerance > 0.0))
    throw DomainError("invalid_argument", "input gain, amplitude and tolerance must be positive");
  HorizonEstimate h{kappa, gain, amplitude, tolerance, 0};
  const double ratio = gain * amplitude / tolerance;
  if (ratio > 1.0) h.horizon = static_cast<long>(std::ceil(std::log(ratio) / -std::log(kappa)));
  return h;
}

double deep_stack_radius(const std::vector<Eigen::MatrixXd>& diag_blocks) {
  if (diag_blocks.empty()) throw DomainError("invalid_argument", "deep_stack_radius needs at least one block");
  double rho = 0.0;
  for (const auto& block : diag_blocks) rho = std::max(rho, spectral_radius(block));
  return rho;
}

Certificate best_certificate(const std::vector<Certificate>& certs) {
  if (certs.empty()) throw DomainError("invalid_argument", "no certificates to compare");
  auto global = [](const Certificate& c) { return c.method != CertificateMethod::SpectralC3; };
  auto rank = [&](const Certificate& c) {
    if (c.verdict == Verdict::Pass) return global(c) ? 0 : 1;
    return c.verdict == Verdict::Unknown ? 2 : 3;
  };
  const Certificate* best = &certs.front();
  for (const auto& c : certs) {
    if (rank(c) < rank(*best) || (rank(c) == rank(*best) && c.kappa < best->kappa)) best = &c;
  }
  return *best;
}

}  // namespace esnssm
