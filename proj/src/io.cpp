#include "esnssm/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "esnssm/error.hpp"

namespace esnssm::io {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw SchemaError("unknown key '" + key + "' in " + what);
  }
}

const json& require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaError("missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw SchemaError("'" + what + "' must be a number");
  return j.get<double>();
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw SchemaError("'" + key + "' must be a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j.front().is_array()) throw SchemaError("'" + key + "' must be a nested array (row-major)");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw SchemaError("'" + key + "' has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)], key);
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw SchemaError("'" + key + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], key);
  return v;
}

json activation_to_json(const Activation& a) {
  switch (a.kind()) {
    case Activation::Kind::Tanh:
      return "tanh";
    case Activation::Kind::Identity:
      return "identity";
    case Activation::Kind::LeakySlope:
      return json{{"leaky_slope", a.slope()}};
  }
  return "tanh";
}

Activation activation_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "tanh") return Activation::tanh();
    if (s == "identity") return Activation::identity();
    throw SchemaError("unknown activation '" + s + "'");
  }
  if (j.is_object()) {
    reject_unknown(j, {"leaky_slope"}, "activation");
    return Activation::leaky_slope(number(require(j, "leaky_slope"), "leaky_slope"));
  }
  throw SchemaError("activation must be \"tanh\", \"identity\" or {\"leaky_slope\": a}");
}

ModelFile model_from_json(const json& j) {
  reject_unknown(j, {"n", "m", "p", "leak", "activation", "W", "U", "b", "C", "d"}, "model file");
  ModelFile mf;
  auto& p = mf.params;
  p.W = matrix_from_json(require(j, "W"), "W");
  p.U = matrix_from_json(require(j, "U"), "U");
  p.b = vector_from_json(require(j, "b"), "b");
  p.leak = number(require(j, "leak"), "leak");
  p.activation = activation_from_json(require(j, "activation"));
  const auto n = require(j, "n").get<long>();
  const auto m = require(j, "m").get<long>();
  if (p.W.rows() != n) throw SchemaError("W does not have n rows");
  // An n×0 U arrives as [[],[],...]; a zero-input model may also omit columns.
  if (p.U.rows() == 0 && m == 0) p.U.resize(n, 0);
  if (p.U.cols() != m) throw SchemaError("U does not have m columns");
  if (j.contains("C")) {
    Readout r;
    r.C = matrix_from_json(j.at("C"), "C");
    r.d = j.contains("d") ? vector_from_json(j.at("d"), "d") : Eigen::VectorXd::Zero(r.C.rows());
    if (j.contains("p") && j.at("p").get<long>() != r.C.rows()) throw SchemaError("C does not have p rows");
    mf.readout = std::move(r);
  } else if (j.contains("d")) {
    throw SchemaError("'d' given without 'C'");
  }
  try {
    p.validate();
    if (mf.readout) mf.readout->validate(p.n());
  } catch (const DomainError& e) {
    throw SchemaError(std::string("invalid model: ") + e.what());
  }
  return mf;
}

json model_to_json(const ReservoirParams& p, const std::optional<Readout>& readout) {
  json j;
  j["n"] = p.n();
  j["m"] = p.m();
  j["p"] = readout ? readout->p() : 0;
  j["leak"] = p.leak;
  j["activation"] = activation_to_json(p.activation);
  j["W"] = matrix_to_json(p.W);
  j["U"] = matrix_to_json(p.U);
  j["b"] = vector_to_json(p.b);
  if (readout) {
    j["C"] = matrix_to_json(readout->C);
    j["d"] = vector_to_json(readout->d);
  }
  return j;
}

json certificate_to_json(const Certificate& c) {
  json j{{"method", to_string(c.method)},
         {"kappa", c.kappa},
         {"margin", c.margin},
         {"verdict", to_string(c.verdict)}};
  if (c.weight_P) j["P"] = matrix_to_json(*c.weight_P);
  return j;
}

json lti_to_json(const LtiModel& lti) {
  json j{{"A", matrix_to_json(lti.A)},
         {"B", matrix_to_json(lti.B)},
         {"C", matrix_to_json(lti.C)},
         {"D", matrix_to_json(lti.D)}};
  if (lti.x_bar) j["x_bar"] = vector_to_json(*lti.x_bar);
  if (lti.u_bar) j["u_bar"] = vector_to_json(*lti.u_bar);
  return j;
}

LtiModel lti_from_json(const json& j) {
  reject_unknown(j, {"A", "B", "C", "D", "x_bar", "u_bar"}, "LTI model");
  LtiModel lti;
  lti.A = matrix_from_json(require(j, "A"), "A");
  lti.B = matrix_from_json(require(j, "B"), "B");
  lti.C = matrix_from_json(require(j, "C"), "C");
  lti.D = j.contains("D") ? matrix_from_json(j.at("D"), "D") : Eigen::MatrixXd::Zero(lti.C.rows(), lti.B.cols());
  if (lti.D.size() == 0) lti.D = Eigen::MatrixXd::Zero(lti.C.rows(), lti.B.cols());
  if (j.contains("x_bar")) lti.x_bar = vector_from_json(j.at("x_bar"), "x_bar");
  if (j.contains("u_bar")) lti.u_bar = vector_from_json(j.at("u_bar"), "u_bar");
  try {
    lti.validate();
  } catch (const DomainError& e) {
    throw SchemaError(std::string("invalid LTI model: ") + e.what());
  }
  return lti;
}

json lifted_to_json(const LiftedModel& lm) {
  json dict;
  switch (lm.dict.kind()) {
    case Dictionary::Kind::IdentityPlusConstant:
      dict = {{"kind", "identity_plus_constant"}};
      break;
    case Dictionary::Kind::Monomials:
      dict = {{"kind", "monomials"}, {"max_degree", lm.dict.max_degree()}};
      break;
    case Dictionary::Kind::RandomFourier:
      dict = {{"kind", "random_fourier"},
              {"count", lm.dict.count()},
              {"bandwidth", lm.dict.bandwidth()},
              {"seed", lm.dict.seed()}};
      break;
  }
  dict["state_dim"] = lm.dict.state_dim();
  dict["output_dim"] = lm.dict.output_dim();
  return json{{"dictionary", dict},
              {"A_phi", matrix_to_json(lm.A)},
              {"B_phi", matrix_to_json(lm.B)},
              {"c_phi", vector_to_json(lm.c)},
              {"C_phi", matrix_to_json(lm.C)},
              {"epsilon", lm.epsilon},
              {"rms_residual", lm.rms_residual},
              {"ridge", lm.ridge},
              {"snapshots", lm.snapshots}};
}

IoData read_io_csv(const std::filesystem::path& path, Eigen::Index m, Eigen::Index p) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("data file " + path.string() + " is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::string> expected{"t"};
  for (Eigen::Index i = 1; i <= m; ++i) expected.push_back("u_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= p; ++i) expected.push_back("y_" + std::to_string(i));
  if (header != expected) throw SchemaError("data file header does not match t,u_1..u_m,y_1..y_p");
  IoData data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw SchemaError("bad number '" + cell + "' on data row " + std::to_string(row));
      values.push_back(v);
    }
    if (values.size() != expected.size())
      throw SchemaError("data row " + std::to_string(row) + " has the wrong number of columns");
    data.inputs.push_back(Eigen::Map<Eigen::VectorXd>(values.data() + 1, m));
    data.outputs.push_back(Eigen::Map<Eigen::VectorXd>(values.data() + 1 + m, p));
    ++row;
  }
  return data;
}

void write_io_csv(const std::filesystem::path& path, const IoData& data) {
  std::ostringstream out;
  const Eigen::Index m = data.inputs.empty() ? 0 : data.inputs.front().size();
  const Eigen::Index p = data.outputs.empty() ? 0 : data.outputs.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
  for (Eigen::Index i = 1; i <= p; ++i) out << ",y_" << i;
  out << "\n";
  for (std::size_t t = 0; t < data.length(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(data.inputs[t](i));
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << format_double(data.outputs[t](i));
    out << "\n";
  }
  write_atomic(path, out.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SchemaError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw SchemaError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw SchemaError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

}  // namespace esnssm::io
