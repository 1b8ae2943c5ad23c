#include "esnssm/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "esnssm/design.hpp"
#include "esnssm/discretize.hpp"
#include "esnssm/error.hpp"
#include "esnssm/freq.hpp"
#include "esnssm/identify.hpp"
#include "esnssm/io.hpp"
#include "esnssm/lift.hpp"
#include "esnssm/linearize.hpp"
#include "esnssm/predict.hpp"
#include "esnssm/random.hpp"
#include "esnssm/stability.hpp"

namespace esnssm::cli {

namespace {

using io::json;

// Streams for CLI-generated randomness; library generators use their own.
constexpr std::uint64_t kInputStream = 21;
constexpr std::uint64_t kInitStream = 22;

struct Session {
  std::string command;
  std::uint64_t seed = 0;
  std::string out;
  json inputs = json::object();

  std::string load(const std::string& label, const std::string& path) {
    std::string text = io::read_text_file(path);
    inputs[label] = io::sha256_hex(text);
    return text;
  }

  json load_json(const std::string& label, const std::string& path) {
    const std::string text = load(label, path);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw SchemaError("cannot parse " + path + ": " + e.what());
    }
  }

  io::ModelFile load_model(const std::string& path) { return io::model_from_json(load_json("model", path)); }

  IoData load_data(const std::string& path, Eigen::Index m, Eigen::Index p) {
    load("data", path);
    return io::read_io_csv(path, m, p);
  }
};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw SchemaError("unknown key '" + item.key() + "' in " + what);
  }
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw SchemaError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

const json& get_required(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw SchemaError(std::string("missing key '") + key + "' in " + what);
  return j.at(key);
}

Readout readout_or_identity(const io::ModelFile& mf) {
  if (mf.readout) return *mf.readout;
  const auto n = mf.params.n();
  return Readout{MatrixXd::Identity(n, n), VectorXd::Zero(n)};
}

std::vector<VectorXd> gaussian_inputs(std::uint64_t seed, std::uint64_t stream, std::size_t steps, Eigen::Index m,
                                      double scale) {
  CounterRng rng(seed, stream);
  std::vector<VectorXd> u;
  u.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) u.push_back(scale * rng.normal_vector(m));
  return u;
}

std::vector<VectorXd> sequence_from_json(const json& j, Eigen::Index dim, const std::string& key) {
  if (!j.is_array()) throw SchemaError("'" + key + "' must be an array of vectors");
  std::vector<VectorXd> seq;
  for (const auto& row : j) {
    seq.push_back(io::vector_from_json(row, key));
    if (seq.back().size() != dim) throw SchemaError("'" + key + "' entries must have length " + std::to_string(dim));
  }
  return seq;
}

json noise_to_json(const NoiseModel& noise) {
  return json{{"Q", io::matrix_to_json(noise.Q)}, {"R", io::matrix_to_json(noise.R)}};
}

json theta_to_json(const StructuredTheta& th) {
  return json{{"theta1", th.theta1},         {"theta2", th.theta2},     {"leak", th.leak},
              {"alpha", th.alpha},           {"raw_theta1", th.raw_theta1}, {"raw_theta2", th.raw_theta2},
              {"leak_clamped", th.leak_clamped}, {"alpha_scaled", th.alpha_scaled}};
}

VectorXd operating_vector(const std::string& csv, Eigen::Index dim, const std::string& name) {
  if (csv.empty()) return VectorXd::Zero(dim);
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw SchemaError("bad number '" + cell + "' in --" + name);
    }
  }
  if (static_cast<Eigen::Index>(vals.size()) != dim)
    throw SchemaError("--" + name + " needs " + std::to_string(dim) + " comma-separated values");
  return Eigen::Map<VectorXd>(vals.data(), dim);
}

// --------------------------------------------------------------------------

struct LtiSource {
  std::string lti_path;
  std::string model_path;
  std::string x_bar, u_bar;

  void bind(CLI::App* sub) {
    sub->add_option("--lti", lti_path, "LTI model JSON {A,B,C,D}");
    sub->add_option("--model", model_path, "reservoir model JSON; linearized at the operating point");
    sub->add_option("--x-bar", x_bar, "operating state, comma-separated (default 0)");
    sub->add_option("--u-bar", u_bar, "operating input, comma-separated (default 0)");
  }

  LtiModel load(Session& s) const {
    if (lti_path.empty() == model_path.empty()) throw SchemaError("give exactly one of --lti and --model");
    if (!lti_path.empty()) return io::lti_from_json(s.load_json("lti", lti_path));
    const auto mf = s.load_model(model_path);
    const auto& p = mf.params;
    return jacobians_at(p, operating_vector(x_bar, p.n(), "x-bar"), operating_vector(u_bar, p.m(), "u-bar"),
                        readout_or_identity(mf));
  }
};

struct SimulateOpts {
  std::string model, inputs_csv, data_out;
  std::size_t steps = 100;
  double input_scale = 1.0, q = 0.0, r = 0.0;
  std::string x0;
};

json cmd_simulate(Session& s, const SimulateOpts& o) {
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  std::vector<VectorXd> inputs;
  if (!o.inputs_csv.empty()) {
    inputs = s.load_data(o.inputs_csv, p.m(), 0).inputs;
  } else {
    inputs = gaussian_inputs(s.seed, kInputStream, o.steps, p.m(), o.input_scale);
  }
  SimulationNoise noise;
  noise.seed = s.seed;
  if (o.q > 0.0) noise.Q = o.q * MatrixXd::Identity(p.n(), p.n());
  if (o.r > 0.0 && mf.readout) noise.R = o.r * MatrixXd::Identity(mf.readout->p(), mf.readout->p());
  const Trajectory traj = simulate(p, mf.readout, operating_vector(o.x0, p.n(), "x0"), inputs, noise);

  if (!o.data_out.empty()) {
    IoData data{traj.inputs, traj.outputs};
    if (data.outputs.empty()) data.outputs.assign(data.inputs.size(), VectorXd(0));
    io::write_io_csv(o.data_out, data);
  }
  double max_norm = 0.0;
  for (const auto& x : traj.states) max_norm = std::max(max_norm, x.norm());
  return json{{"steps", traj.length()},
              {"final_state", io::vector_to_json(traj.states.back())},
              {"max_state_norm", max_norm},
              {"data_file", o.data_out.empty() ? json(nullptr) : json(o.data_out)}};
}

struct CertifyOpts {
  std::string model, x_bar, u_bar;
  std::size_t vertex_budget = 4096;
  double amplitude = 0.0, tolerance = 0.0;
};

json cmd_certify(Session& s, const CertifyOpts& o) {
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  std::vector<Certificate> certs{
      certify_lipschitz(p),
      certify_weighted(p, o.vertex_budget),
      certify_spectral(p, operating_vector(o.x_bar, p.n(), "x-bar"), operating_vector(o.u_bar, p.m(), "u-bar")),
  };
  json list = json::array();
  for (const auto& c : certs) {
    json cj = io::certificate_to_json(c);
    if (c.method == CertificateMethod::WeightedC2) cj["vertices_checked"] = c.vertices_checked;
    list.push_back(cj);
  }
  const Certificate best = best_certificate(certs);
  json res{{"certificates", list}, {"best", io::certificate_to_json(best)}, {"input_gain", input_gain(p)}};
  if (o.amplitude > 0.0 && o.tolerance > 0.0) {
    const Certificate global = best_certificate({certs[0], certs[1]});
    const auto h = memory_horizon(global.kappa, input_gain(p), o.amplitude, o.tolerance);
    res["memory_horizon"] = {{"kappa", h.kappa}, {"horizon", h.horizon}, {"amplitude", h.amplitude},
                             {"tolerance", h.tolerance}};
  }
  return res;
}

struct LinearizeOpts {
  std::string model, x_bar, u_bar, lti_out;
  std::vector<double> radii;
};

json cmd_linearize(Session& s, const LinearizeOpts& o) {
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  const LtiModel lti = jacobians_at(p, operating_vector(o.x_bar, p.n(), "x-bar"),
                                    operating_vector(o.u_bar, p.m(), "u-bar"), readout_or_identity(mf));
  if (!o.lti_out.empty()) io::write_atomic(o.lti_out, io::lti_to_json(lti).dump(2) + "\n");
  json res{{"lti", io::lti_to_json(lti)}, {"spectral_radius", spectral_radius(lti.A)}};
  if (!o.radii.empty()) {
    json bounds = json::array();
    for (double r : o.radii) bounds.push_back({{"radius", r}, {"bound", remainder_bound(p, r)}});
    res["remainder_bounds"] = bounds;
  }
  return res;
}

struct LiftOpts {
  std::string model, dictionary = "identity";
  int degree = 2, features = 64;
  double bandwidth = 1.0, ridge = 1e-8, input_scale = 1.0;
  std::size_t trajectories = 4, steps = 200, horizon = 50;
};

json cmd_lift(Session& s, const LiftOpts& o) {
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  const Dictionary dict = [&] {
    if (o.dictionary == "identity") return Dictionary::identity_plus_constant(p.n());
    if (o.dictionary == "monomials") return Dictionary::monomials(p.n(), o.degree);
    if (o.dictionary == "fourier") return Dictionary::random_fourier(p.n(), o.features, o.bandwidth, s.seed);
    throw SchemaError("unknown dictionary '" + o.dictionary + "'");
  }();
  std::vector<Trajectory> data;
  CounterRng x0_rng(s.seed, kInitStream);
  for (std::size_t i = 0; i < o.trajectories; ++i) {
    const auto u = gaussian_inputs(s.seed, kInputStream + 100 * (i + 1), o.steps, p.m(), o.input_scale);
    data.push_back(simulate(p, std::nullopt, 0.5 * x0_rng.normal_vector(p.n()), u));
  }
  const LiftedModel lm = edmd_fit(p, data, dict, o.ridge, mf.readout);
  const auto check_u = gaussian_inputs(s.seed, kInputStream + 7, o.horizon, p.m(), o.input_scale);
  const Trajectory check = simulate(p, std::nullopt, 0.5 * x0_rng.normal_vector(p.n()), check_u);
  const RolloutError err = lifted_rollout_error(lm, p, check, o.horizon);
  return json{{"lifted", io::lifted_to_json(lm)},
              {"dynamic_radius", lm.dynamic_radius()},
              {"rollout", {{"horizon", o.horizon},
                           {"bound_valid", err.bound_valid},
                           {"violations", err.violations},
                           {"final_discrepancy", err.discrepancy.empty() ? 0.0 : err.discrepancy.back()}}}};
}

struct DiscretizeOpts {
  std::string method = "zoh", model, x_bar, u_bar;
  double dt = 1.0, tau = 1.0, q = 0.0;
};

json cmd_discretize(Session& s, const DiscretizeOpts& o) {
  if (o.method == "euler") return json{{"method", "euler"}, {"leak", euler_leak(o.dt, o.tau)}};
  if (o.method == "tustin") {
    const auto t = tustin_leak(o.dt, o.tau);
    return json{{"method", "tustin"}, {"leak", t.leak}, {"exceeds_unit", t.exceeds_unit}};
  }
  if (o.method != "zoh") throw SchemaError("unknown --method '" + o.method + "'");
  if (o.model.empty()) throw SchemaError("--method zoh needs --model");
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  CtLinearModel ct =
      ct_jacobians(p, o.tau, operating_vector(o.x_bar, p.n(), "x-bar"), operating_vector(o.u_bar, p.m(), "u-bar"));
  ct.dt = o.dt;
  ct.Q_c = o.q * MatrixXd::Identity(p.n(), p.n());
  const DiscreteModel dm = zoh_discretize(ct);
  return json{{"method", "zoh"},
              {"A_d", io::matrix_to_json(dm.A_d)},
              {"B_d", io::matrix_to_json(dm.B_d)},
              {"Q_d", io::matrix_to_json(dm.Q_d)}};
}

struct KernelOpts {
  LtiSource src;
  long K = -1;
  double tolerance = 1e-8;
  std::string csv;
};

json cmd_kernel(Session& s, const KernelOpts& o) {
  const LtiModel lti = o.src.load(s);
  const ImpulseKernel ker =
      o.K >= 0 ? impulse_kernel(lti, static_cast<std::size_t>(o.K)) : impulse_kernel_auto(lti, o.tolerance);
  if (!o.csv.empty()) {
    std::ostringstream out;
    out << "k";
    for (Eigen::Index i = 1; i <= lti.p(); ++i)
      for (Eigen::Index j = 1; j <= lti.m(); ++j) out << ",h[" << i << "][" << j << "]";
    out << "\n";
    for (std::size_t k = 0; k < ker.blocks.size(); ++k) {
      out << k;
      for (Eigen::Index i = 0; i < lti.p(); ++i)
        for (Eigen::Index j = 0; j < lti.m(); ++j) out << ',' << io::format_double(ker.blocks[k](i, j));
      out << "\n";
    }
    io::write_atomic(o.csv, out.str());
  }
  json res{{"truncation", ker.truncation},
           {"tail_bound", std::isfinite(ker.tail_bound) ? json(ker.tail_bound) : json("inf")},
           {"decay_constant", ker.decay_constant},
           {"radius", ker.radius}};
  try {
    const ModalDecomposition md = modal(lti);
    json eig = json::array();
    for (Eigen::Index i = 0; i < md.eigenvalues.size(); ++i)
      eig.push_back({{"re", md.eigenvalues(i).real()},
                     {"im", md.eigenvalues(i).imag()},
                     {"modulus", std::abs(md.eigenvalues(i))},
                     {"angle", std::arg(md.eigenvalues(i))}});
    res["modes"] = {{"eigenvalues", eig}, {"eigvec_condition", md.eigvec_condition}};
  } catch (const DomainError& e) {
    res["modes"] = {{"error", e.code()}};
  }
  return res;
}

struct SpectrumOpts {
  LtiSource src;
  std::size_t grid = 512;
  std::string csv;
};

json cmd_spectrum(Session& s, const SpectrumOpts& o) {
  const LtiModel lti = o.src.load(s);
  const auto rows = spectrum(lti, o.grid);
  if (!o.csv.empty()) {
    std::ostringstream out;
    out << "omega";
    const Eigen::Index k = std::min(lti.p(), lti.m());
    for (Eigen::Index i = 1; i <= k; ++i) out << (i == 1 ? ",sigma_max" : ",sigma_" + std::to_string(i));
    out << "\n";
    for (const auto& r : rows) {
      out << io::format_double(r.omega);
      for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) out << ',' << io::format_double(r.singular_values(i));
      out << "\n";
    }
    io::write_atomic(o.csv, out.str());
  }
  const HinfEstimate hinf = hinf_norm_grid(lti, o.grid);
  json res{{"grid_points", rows.size()},
           {"hinf", {{"value", hinf.value}, {"omega_peak", hinf.omega_peak}, {"bracket_width", hinf.bracket_width}}}};
  if (lti.D.isZero(0.0) && spectral_radius(lti.A) < 1.0) res["h2"] = h2_norm(lti);
  const RankReport rank = ctrb_obsv_rank(lti, 1e-10);
  res["rank"] = {{"controllability", rank.rank_c}, {"observability", rank.rank_o}};
  return res;
}

struct IdentifyOpts {
  std::string method = "em", data, config, model;
  double ridge = 1e-6, prior_precision = 1.0, noise_var = 1.0;
  bool bayes = false;
  int order = 0;
  double singular_floor = 0.0;
  std::size_t markov_length = 0;
  std::string model_out;
};

json cmd_identify_em(Session& s, const IdentifyOpts& o) {
  if (o.config.empty()) throw SchemaError("identify em needs --config");
  const json cfg = s.load_json("config", o.config);
  reject_unknown(cfg, {"structure", "max_iters", "rel_tol", "init"}, "EM config");
  const json& init = get_required(cfg, "init", "EM config");
  reject_unknown(init, {"A", "B", "C", "D", "Q", "R", "x0_mean", "x0_cov"}, "EM init");
  LtiModel lti = io::lti_from_json(json{{"A", get_required(init, "A", "EM init")},
                                        {"B", get_required(init, "B", "EM init")},
                                        {"C", get_required(init, "C", "EM init")},
                                        {"D", init.contains("D") ? init.at("D") : json::array()}});
  NoiseModel noise{io::matrix_from_json(get_required(init, "Q", "EM init"), "Q"),
                   io::matrix_from_json(get_required(init, "R", "EM init"), "R")};
  GaussianBelief prior{init.contains("x0_mean") ? io::vector_from_json(init.at("x0_mean"), "x0_mean")
                                                : VectorXd::Zero(lti.n()),
                       init.contains("x0_cov") ? io::matrix_from_json(init.at("x0_cov"), "x0_cov")
                                               : MatrixXd::Identity(lti.n(), lti.n())};
  std::optional<StructureBasis> structure;
  const json st = cfg.contains("structure") ? cfg.at("structure") : json("free");
  if (st.is_object()) {
    reject_unknown(st, {"W_bar", "L_sigma"}, "structure");
    structure = StructureBasis{io::matrix_from_json(get_required(st, "W_bar", "structure"), "W_bar"),
                               get_number(st, "L_sigma", 1.0)};
  } else if (!(st.is_string() && st.get<std::string>() == "free")) {
    throw SchemaError("'structure' must be \"free\" or {\"W_bar\", \"L_sigma\"}");
  }
  const int max_iters = static_cast<int>(get_number(cfg, "max_iters", 200));
  const double rel_tol = get_number(cfg, "rel_tol", 1e-8);
  const IoData data = s.load_data(o.data, lti.m(), lti.p());
  const EmRunResult r = em_run(lti, noise, prior, data, structure, max_iters, rel_tol);
  if (!o.model_out.empty()) io::write_atomic(o.model_out, io::lti_to_json(r.lti).dump(2) + "\n");
  json res{{"method", "em"},
           {"lti", io::lti_to_json(r.lti)},
           {"noise", noise_to_json(r.noise)},
           {"loglik_trace", r.loglik_trace},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"constrained_decreases", r.constrained_decreases},
           {"jitter_events", r.jitter_events}};
  if (r.theta) {
    res["theta"] = theta_to_json(*r.theta);
    res["certificate"] = io::certificate_to_json(structured_certificate(*r.theta, structure->L_sigma));
  }
  return res;
}

json cmd_identify_readout(Session& s, const IdentifyOpts& o) {
  if (o.model.empty()) throw SchemaError("identify readout needs --model");
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  // Output dimension comes from the data header.
  const std::string text = io::read_text_file(o.data);
  const std::string header = text.substr(0, text.find('\n'));
  const auto cols = static_cast<Eigen::Index>(std::count(header.begin(), header.end(), ',')) + 1;
  const Eigen::Index py = cols - 1 - p.m();
  if (py < 1) throw SchemaError("data file has no output columns");
  const IoData data = s.load_data(o.data, p.m(), py);
  const Trajectory traj = simulate(p, std::nullopt, VectorXd::Zero(p.n()), data.inputs);
  // outputs[t] observes the state after input t.
  const std::vector<VectorXd> states(traj.states.begin() + 1, traj.states.end());
  json res{{"method", "readout"}};
  Readout readout;
  if (o.bayes) {
    const BayesReadout br =
        readout_bayes(states, {}, data.outputs, o.prior_precision, o.noise_var * MatrixXd::Identity(py, py));
    readout = br.mean;
    res["estimator"] = "bayes";
    res["entry_variance"] = io::matrix_to_json(br.entry_variance());
  } else {
    readout = readout_ml(states, {}, data.outputs, o.ridge);
    res["estimator"] = "ridge";
  }
  double sse = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t)
    sse += (data.outputs[t] - readout.C * states[t] - readout.d).squaredNorm();
  res["C"] = io::matrix_to_json(readout.C);
  res["d"] = io::vector_to_json(readout.d);
  res["train_rmse"] = std::sqrt(sse / std::max<double>(1.0, static_cast<double>(states.size() * py)));
  if (!o.model_out.empty()) io::write_atomic(o.model_out, io::model_to_json(p, readout).dump(2) + "\n");
  return res;
}

json cmd_identify_subspace(Session& s, const IdentifyOpts& o) {
  if (o.model.empty()) throw SchemaError("identify subspace needs --model for the structure basis W");
  const auto mf = s.load_model(o.model);
  const auto& p = mf.params;
  const Eigen::Index py = mf.readout ? mf.readout->p() : p.n();
  const IoData data = s.load_data(o.data, p.m(), py);
  SubspaceOptions opts;
  opts.order = o.order > 0 ? o.order : static_cast<int>(p.n());
  opts.singular_floor = o.singular_floor;
  opts.markov_length = o.markov_length;
  const SubspaceResult r = subspace_shape(data, opts, StructureBasis{p.W, p.activation.lipschitz()});
  return json{{"method", "subspace"},
              {"A_ssi", io::matrix_to_json(r.A_ssi)},
              {"B_ssi", io::matrix_to_json(r.B_ssi)},
              {"C_ssi", io::matrix_to_json(r.C_ssi)},
              {"hankel_singular_values", io::vector_to_json(r.hankel_singular_values)},
              {"theta", theta_to_json(r.theta)},
              {"certificate", io::certificate_to_json(r.certificate)},
              {"markov_used", r.markov_used}};
}

json cmd_identify(Session& s, const IdentifyOpts& o) {
  if (o.data.empty()) throw SchemaError("identify needs --data");
  if (o.method == "em") return cmd_identify_em(s, o);
  if (o.method == "readout") return cmd_identify_readout(s, o);
  if (o.method == "subspace") return cmd_identify_subspace(s, o);
  throw SchemaError("unknown identify method '" + o.method + "'");
}

struct DesignOpts {
  std::string spec, model_out;
};

json cmd_design(Session& s, const DesignOpts& o) {
  const json spec = s.load_json("spec", o.spec);
  reject_unknown(spec,
                 {"n", "m", "horizon", "half_life", "target_radius", "leak", "slope", "activation", "pole_angles",
                  "radii_range", "input_variance", "input_cov"},
                 "design spec");
  get_required(spec, "n", "design spec");
  get_required(spec, "leak", "design spec");
  const auto n = static_cast<Eigen::Index>(get_number(spec, "n", 0));
  const auto m = static_cast<Eigen::Index>(get_number(spec, "m", 1));
  if (n < 1 || m < 0) throw SchemaError("design spec needs n ≥ 1 and m ≥ 0");
  const double leak = get_number(spec, "leak", 1.0);
  const double slope = get_number(spec, "slope", 1.0);
  const Activation act = spec.contains("activation") ? io::activation_from_json(spec.at("activation")) : Activation::tanh();

  double r_star = 0.0;
  const int given = int(spec.contains("horizon")) + int(spec.contains("half_life")) + int(spec.contains("target_radius"));
  if (given != 1) throw SchemaError("design spec needs exactly one of horizon, half_life, target_radius");
  if (spec.contains("target_radius")) {
    r_star = get_number(spec, "target_radius", 0.0);
    if (!(r_star > 0.0 && r_star < 1.0)) throw DomainError("invalid_target", "target_radius must lie in (0, 1)");
  } else {
    MemoryTarget tgt;
    if (spec.contains("horizon")) tgt.horizon = get_number(spec, "horizon", 0.0);
    if (spec.contains("half_life")) tgt.half_life = get_number(spec, "half_life", 0.0);
    r_star = target_radius(tgt);
  }
  const GammaChoice gc = gamma_for_radius(r_star, leak, slope, act.lipschitz());

  // Oscillatory pairs at radius γ first, then real poles; the first real
  // pole sits at γ so the designed spectral radius is exact.
  std::vector<PoleSpec> poles;
  Eigen::Index used = 0;
  if (spec.contains("pole_angles")) {
    for (const double th : io::vector_from_json(spec.at("pole_angles"), "pole_angles")) {
      const bool real = std::sin(th) == 0.0;
      used += real ? 1 : 2;
      poles.push_back({gc.gamma, th});
    }
  }
  if (used > n) throw SchemaError("pole_angles need more than n dimensions");
  const Eigen::Index rest = n - used;
  if (rest > 0) {
    if (spec.contains("radii_range")) {
      const VectorXd rr = io::vector_from_json(spec.at("radii_range"), "radii_range");
      if (rr.size() != 2 || !(rr(0) > 0.0 && rr(0) <= rr(1) && rr(1) < 1.0))
        throw SchemaError("radii_range must be [r_min, r_max] with 0 < r_min ≤ r_max < 1");
      // Shape from the range, largest radius pinned at γ.
      auto tiles = log_uniform_poles(rest, rr(0), rr(1));
      double top = 0.0;
      for (const auto& t : tiles) top = std::max(top, t.radius);
      for (auto& t : tiles) t.radius *= gc.gamma / top;
      poles.insert(poles.end(), tiles.begin(), tiles.end());
    } else {
      for (Eigen::Index i = 0; i < rest; ++i) poles.push_back({gc.gamma, 0.0});
    }
  }

  ReservoirParams p;
  p.W = make_normal_reservoir(n, poles, s.seed);
  const MatrixXd input_cov =
      spec.contains("input_cov") ? io::matrix_from_json(spec.at("input_cov"), "input_cov") : MatrixXd::Identity(m, m);
  p.U = input_scaling(get_number(spec, "input_variance", 1.0), input_cov, n, s.seed);
  p.b = VectorXd::Zero(n);
  p.leak = leak;
  p.activation = act;
  p.validate();
  const json model = io::model_to_json(p, std::nullopt);
  if (!o.model_out.empty()) io::write_atomic(o.model_out, model.dump(2) + "\n");
  const Certificate cert = best_certificate(
      {certify_lipschitz(p), certify_spectral(p, VectorXd::Zero(n), VectorXd::Zero(m))});
  return json{{"target_radius", r_star},
              {"gamma", gc.gamma},
              {"gamma_clipped", gc.clipped},
              {"certificate", io::certificate_to_json(cert)},
              {"model", model}};
}

struct PredictOpts {
  std::string config;
};

json cmd_predict(Session& s, const PredictOpts& o) {
  const json cfg = s.load_json("config", o.config);
  reject_unknown(cfg, {"lti", "Q", "R", "belief", "future_inputs", "horizon"}, "predict config");
  const LtiModel lti = io::lti_from_json(get_required(cfg, "lti", "predict config"));
  const NoiseModel noise{io::matrix_from_json(get_required(cfg, "Q", "predict config"), "Q"),
                         io::matrix_from_json(get_required(cfg, "R", "predict config"), "R")};
  const json& bj = get_required(cfg, "belief", "predict config");
  reject_unknown(bj, {"mean", "cov"}, "belief");
  const GaussianBelief belief{io::vector_from_json(get_required(bj, "mean", "belief"), "mean"),
                              io::matrix_from_json(get_required(bj, "cov", "belief"), "cov")};
  std::vector<VectorXd> future;
  if (cfg.contains("future_inputs")) {
    if (cfg.contains("horizon")) throw SchemaError("give either future_inputs or horizon, not both");
    future = sequence_from_json(cfg.at("future_inputs"), lti.m(), "future_inputs");
  } else {
    const double h = get_number(cfg, "horizon", 1.0);
    if (!(h >= 1.0)) throw SchemaError("horizon must be ≥ 1");
    future.assign(static_cast<std::size_t>(h), VectorXd::Zero(lti.m()));
  }
  const PredictiveDistribution pd = predictive(lti, noise, belief, future);
  return json{{"horizon", pd.horizon},
              {"mean", io::vector_to_json(pd.mean)},
              {"covariance", io::matrix_to_json(pd.covariance)},
              {"half_widths_95", io::vector_to_json(pd.half_widths())},
              {"state_mean", io::vector_to_json(pd.state_mean)},
              {"state_cov", io::matrix_to_json(pd.state_cov)}};
}

void emit(const Session& s, const json& report) {
  const std::string text = report.dump(2) + "\n";
  if (s.out.empty()) {
    std::cout << text;
  } else {
    io::write_atomic(s.out, text);
  }
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

int run(const std::vector<std::string>& args_in) {
  CLI::App app{"Echo state networks as state-space models: simulation, certificates, LTI surrogates, "
               "frequency analysis, identification, design and prediction.",
               "esnssm"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Session session;
  auto common = [&session](CLI::App* sub) {
    sub->add_option("--out", session.out, "report path (JSON); stdout when omitted");
    sub->add_option("--seed", session.seed, "seed for every randomized step")->capture_default_str();
  };

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "run the reservoir on given or seeded Gaussian inputs");
  common(c_sim);
  c_sim->add_option("--model", sim.model, "model JSON")->required();
  c_sim->add_option("--inputs", sim.inputs_csv, "input CSV with header t,u_1..u_m");
  c_sim->add_option("--steps", sim.steps, "number of seeded input steps when --inputs is absent")->capture_default_str();
  c_sim->add_option("--input-scale", sim.input_scale, "std of seeded inputs")->capture_default_str();
  c_sim->add_option("--process-noise", sim.q, "isotropic process noise variance")->capture_default_str();
  c_sim->add_option("--meas-noise", sim.r, "isotropic measurement noise variance")->capture_default_str();
  c_sim->add_option("--x0", sim.x0, "initial state, comma-separated (default 0)");
  c_sim->add_option("--data-out", sim.data_out, "write t,u,y CSV here");

  CertifyOpts cert;
  auto* c_cert = app.add_subcommand("certify", "run all three contraction certificates and report the best");
  common(c_cert);
  c_cert->add_option("--model", cert.model, "model JSON")->required();
  c_cert->add_option("--vertex-budget", cert.vertex_budget, "slope vertices for the weighted test")->capture_default_str();
  c_cert->add_option("--x-bar", cert.x_bar, "operating state for the local test (default 0)");
  c_cert->add_option("--u-bar", cert.u_bar, "operating input for the local test (default 0)");
  c_cert->add_option("--amplitude", cert.amplitude, "input perturbation amplitude for the memory horizon");
  c_cert->add_option("--tolerance", cert.tolerance, "state tolerance for the memory horizon");

  LinearizeOpts lin;
  auto* c_lin = app.add_subcommand("linearize", "small-signal LTI model at an operating point");
  common(c_lin);
  c_lin->add_option("--model", lin.model, "model JSON")->required();
  c_lin->add_option("--x-bar", lin.x_bar, "operating state (default 0)");
  c_lin->add_option("--u-bar", lin.u_bar, "operating input (default 0)");
  c_lin->add_option("--radius", lin.radii, "tube radii for the remainder bound");
  c_lin->add_option("--lti-out", lin.lti_out, "also write the LTI model JSON here");

  LiftOpts lift;
  auto* c_lift = app.add_subcommand("lift", "EDMD lifted linear model from seeded simulations");
  common(c_lift);
  c_lift->add_option("--model", lift.model, "model JSON")->required();
  c_lift->add_option("--dictionary", lift.dictionary, "identity | monomials | fourier")->capture_default_str();
  c_lift->add_option("--degree", lift.degree, "monomial degree")->capture_default_str();
  c_lift->add_option("--features", lift.features, "random Fourier feature count")->capture_default_str();
  c_lift->add_option("--bandwidth", lift.bandwidth, "random Fourier bandwidth")->capture_default_str();
  c_lift->add_option("--ridge", lift.ridge, "ridge penalty")->capture_default_str();
  c_lift->add_option("--trajectories", lift.trajectories, "training trajectories")->capture_default_str();
  c_lift->add_option("--steps", lift.steps, "steps per trajectory")->capture_default_str();
  c_lift->add_option("--input-scale", lift.input_scale, "std of seeded inputs")->capture_default_str();
  c_lift->add_option("--horizon", lift.horizon, "rollout check horizon")->capture_default_str();

  DiscretizeOpts disc;
  auto* c_disc = app.add_subcommand("discretize", "leak from a time constant, or exact ZOH model");
  common(c_disc);
  c_disc->add_option("--method", disc.method, "euler | tustin | zoh")->capture_default_str();
  c_disc->add_option("--dt", disc.dt, "sampling interval")->capture_default_str();
  c_disc->add_option("--tau", disc.tau, "time constant")->capture_default_str();
  c_disc->add_option("--model", disc.model, "model JSON (zoh)");
  c_disc->add_option("--x-bar", disc.x_bar, "operating state (zoh, default 0)");
  c_disc->add_option("--u-bar", disc.u_bar, "operating input (zoh, default 0)");
  c_disc->add_option("--process-noise", disc.q, "isotropic CT noise intensity (zoh)")->capture_default_str();

  KernelOpts ker;
  auto* c_ker = app.add_subcommand("kernel", "impulse kernel h_k = C A^k B with tail bound and modes");
  common(c_ker);
  ker.src.bind(c_ker);
  c_ker->add_option("--K", ker.K, "truncation index (automatic when omitted)");
  c_ker->add_option("--tolerance", ker.tolerance, "tail tolerance for automatic truncation")->capture_default_str();
  c_ker->add_option("--csv", ker.csv, "write k,h[i][j] CSV here");

  SpectrumOpts spec;
  auto* c_spec = app.add_subcommand("spectrum", "singular values of H(e^jw) on a grid, H2 and H-infinity");
  common(c_spec);
  spec.src.bind(c_spec);
  c_spec->add_option("--grid", spec.grid, "grid points on [0, pi]")->capture_default_str();
  c_spec->add_option("--csv", spec.csv, "write omega,sigma_max,... CSV here");

  IdentifyOpts idf;
  auto* c_idf = app.add_subcommand("identify", "EM, readout or subspace identification from I/O data");
  common(c_idf);
  c_idf->add_option("--method", idf.method, "em | readout | subspace")->capture_default_str();
  c_idf->add_option("--data", idf.data, "data CSV with header t,u_1..u_m,y_1..y_p");
  c_idf->add_option("--config", idf.config, "EM config JSON");
  c_idf->add_option("--model", idf.model, "model JSON (readout, subspace)");
  c_idf->add_option("--ridge", idf.ridge, "readout ridge")->capture_default_str();
  c_idf->add_flag("--bayes", idf.bayes, "Bayesian readout instead of ridge");
  c_idf->add_option("--prior-precision", idf.prior_precision, "Bayesian readout prior precision")->capture_default_str();
  c_idf->add_option("--noise-var", idf.noise_var, "Bayesian readout isotropic noise variance")->capture_default_str();
  c_idf->add_option("--order", idf.order, "subspace order (default n)");
  c_idf->add_option("--singular-floor", idf.singular_floor, "subspace singular value floor")->capture_default_str();
  c_idf->add_option("--markov-length", idf.markov_length, "FIR length (0: automatic)")->capture_default_str();
  c_idf->add_option("--model-out", idf.model_out, "write the identified model here");

  DesignOpts des;
  auto* c_des = app.add_subcommand("design", "reservoir from a memory target");
  common(c_des);
  c_des->add_option("--spec", des.spec, "design spec JSON")->required();
  c_des->add_option("--model-out", des.model_out, "write the model JSON here");

  PredictOpts pred;
  auto* c_pred = app.add_subcommand("predict", "h-step predictive mean, covariance and 95% half-widths");
  common(c_pred);
  c_pred->add_option("--config", pred.config, "predict config JSON")->required();

  std::vector<std::string> args(args_in.rbegin(), args_in.rend());
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  session.command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  json report{{"tool", "esnssm"}, {"version", kToolVersion}, {"command", session.command}, {"seed", session.seed}};
  try {
    json results;
    if (sub == c_sim) results = cmd_simulate(session, sim);
    else if (sub == c_cert) results = cmd_certify(session, cert);
    else if (sub == c_lin) results = cmd_linearize(session, lin);
    else if (sub == c_lift) results = cmd_lift(session, lift);
    else if (sub == c_disc) results = cmd_discretize(session, disc);
    else if (sub == c_ker) results = cmd_kernel(session, ker);
    else if (sub == c_spec) results = cmd_spectrum(session, spec);
    else if (sub == c_idf) results = cmd_identify(session, idf);
    else if (sub == c_des) results = cmd_design(session, des);
    else results = cmd_predict(session, pred);
    report["inputs"] = session.inputs;
    report["results"] = results;
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(session, report);
    return 0;
  } catch (const DomainError& e) {
    report["inputs"] = session.inputs;
    report["error"] = {{"kind", "domain"}, {"code", e.code()}, {"message", e.what()}};
    std::cerr << report["error"].dump() << "\n";
    try {
      if (!session.out.empty()) emit(session, report);
    } catch (const std::exception&) {
    }
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << json{{"kind", "schema"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << json{{"kind", "schema"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << json{{"kind", "io"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}

}  // namespace esnssm::cli
