#pragma once

// Helpers for driving the esnssm binary as a subprocess.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace clitest {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh scratch directory under the system temp dir.
inline fs::path scratch(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("esnssm_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline Result run(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + ESNSSM_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                          e.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

/// The report with the timing field removed.
inline nlohmann::json stable_report(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("wall_time_s");
  return j;
}

/// Input files shared by the CLI tests. The data CSV comes from the
/// binary itself (simulate with noise).
inline void write_fixtures(const fs::path& dir) {
  spit(dir / "model.json", R"({"n": 3, "m": 1, "p": 1, "leak": 0.7, "activation": "tanh",
    "W": [[0.3, -0.2, 0.1], [0.25, 0.2, -0.15], [-0.1, 0.3, 0.35]],
    "U": [[0.8], [-0.5], [0.3]], "b": [0.05, 0.0, -0.05],
    "C": [[1.0, -0.5, 0.25]], "d": [0.1]})");
  spit(dir / "scalar.json", R"({"A": [[0.9]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]})");
  spit(dir / "lti.json", R"({"A": [[0.5, 0.3], [-0.2, 0.6]], "B": [[1.0], [0.5]], "C": [[1.0, -1.0]]})");
  spit(dir / "em.json", R"({"max_iters": 20, "rel_tol": 0,
    "init": {"A": [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]], "B": [[0.1], [0.1], [0.1]],
             "C": [[1.0, -0.5, 0.25]], "Q": [[0.01, 0, 0], [0, 0.01, 0], [0, 0, 0.01]], "R": [[0.01]]}})");
  spit(dir / "design.json", R"({"n": 6, "m": 2, "horizon": 30, "leak": 0.5, "pole_angles": [0.7],
    "radii_range": [0.3, 0.9]})");
  spit(dir / "predict.json", R"({"lti": {"A": [[0.5, 0.3], [-0.2, 0.6]], "B": [[1.0], [0.5]], "C": [[1.0, -1.0]]},
    "Q": [[0.1, 0.0], [0.0, 0.1]], "R": [[0.2]], "belief": {"mean": [1.0, -1.0], "cov": [[0.5, 0.1], [0.1, 0.4]]},
    "future_inputs": [[1.0], [0.0], [-1.0]]})");
}

struct Command {
  std::string name;
  std::string args;  // without --out
};

/// One invocation per subcommand (and per identify method), all seeded.
inline std::vector<Command> all_commands(const fs::path& dir) {
  const auto q = [&](const char* f) { return "\"" + (dir / f).string() + "\""; };
  return {
      {"simulate", "simulate --model " + q("model.json") + " --steps 300 --process-noise 1e-4 --meas-noise 1e-3 --seed 5 --data-out " + q("data.csv")},
      {"certify", "certify --model " + q("model.json") + " --amplitude 0.1 --tolerance 1e-3 --seed 5"},
      {"linearize", "linearize --model " + q("model.json") + " --x-bar 0.1,0,-0.1 --radius 0.01 0.1 --seed 5"},
      {"lift", "lift --model " + q("model.json") + " --dictionary fourier --features 40 --bandwidth 1 --steps 100 --seed 5"},
      {"discretize", "discretize --method zoh --dt 0.1 --tau 1 --model " + q("model.json") + " --process-noise 0.01 --seed 5"},
      {"kernel", "kernel --lti " + q("lti.json") + " --K 40 --seed 5"},
      {"spectrum", "spectrum --lti " + q("lti.json") + " --grid 64 --seed 5"},
      {"identify-em", "identify --method em --data " + q("data.csv") + " --config " + q("em.json") + " --seed 5"},
      {"identify-readout", "identify --method readout --data " + q("data.csv") + " --model " + q("model.json") + " --bayes --seed 5"},
      {"identify-subspace", "identify --method subspace --data " + q("data.csv") + " --model " + q("model.json") + " --seed 5"},
      {"design", "design --spec " + q("design.json") + " --seed 5"},
      {"predict", "predict --config " + q("predict.json") + " --seed 5"},
  };
}

}  // namespace clitest
