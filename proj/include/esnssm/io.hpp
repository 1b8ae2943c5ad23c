#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "esnssm/core.hpp"
#include "esnssm/freq.hpp"
#include "esnssm/identify.hpp"
#include "esnssm/lift.hpp"
#include "esnssm/linearize.hpp"
#include "esnssm/stability.hpp"

// JSON and CSV encodings of the model, certificate, and data files.
// Matrices are row-major nested arrays of float64.

namespace esnssm::io {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& key);
Eigen::VectorXd vector_from_json(const json& j, const std::string& key);

/// Reservoir model file. Keys: n, m, p, leak, activation, W, U, b, and
/// optionally C, d. Unknown keys are rejected.
struct ModelFile {
  ReservoirParams params;
  std::optional<Readout> readout;
};

ModelFile model_from_json(const json& j);
json model_to_json(const ReservoirParams& p, const std::optional<Readout>& readout);

json activation_to_json(const Activation& a);
Activation activation_from_json(const json& j);

json certificate_to_json(const Certificate& c);
json lti_to_json(const LtiModel& lti);
LtiModel lti_from_json(const json& j);
json lifted_to_json(const LiftedModel& lm);

/// `t,u_1..u_m,y_1..y_p`; row t holds inputs[t] and outputs[t].
IoData read_io_csv(const std::filesystem::path& path, Eigen::Index m, Eigen::Index p);
void write_io_csv(const std::filesystem::path& path, const IoData& data);

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string sha256_hex(const std::string& bytes);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace esnssm::io
