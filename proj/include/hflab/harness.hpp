#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hflab/spec.hpp"

#include <json.hpp>

namespace hflab::harness {

// Full experiment configuration: the Hamiltonian spec plus run parameters.
// Round-trips losslessly through JSON; the FNV hash of the canonical dump is
// stamped into every output file.
struct ExperimentConfig {
  HamiltonianSpec spec = canonical_spec();
  std::uint64_t seed = 20240601;
  int samples = 2000;
  std::string out_dir = "out";

  // experiment knobs
  double s = 0.5;                       // fractional exponent
  double z_imag = 1e-3;                 // Im z for Green-function studies
  double energy = 0.0;                  // Re z / band position
  int max_distance = 10;                // decay-study pair separation
  std::vector<int> volume_l = {3, 5, 7, 9};
  int volume_reference_l = 12;
  std::vector<double> sweep_g = {1e-1, 1e-2, 1e-3, 1e-4};
  double v_grid_lo = -12.0, v_grid_hi = 12.0;
  int v_grid_points = 241;
  int saw_n_max = 16;
  int saw_dim = 2;
  double weak_e_lo = 4.0, weak_e_hi = 5.0;
  int weak_e_points = 3;
  std::vector<double> weak_s = {0.5};
  std::vector<double> weak_mu = {0.05, 0.1, 0.2};
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& c);

// dotted-path override, e.g. "spec.lambda=50" or "model.c_rho=2"
void apply_override(nlohmann::json& j, const std::string& assignment);

// Atomic CSV/text writer: stamps header comments (config hash, code version,
// seed), writes to a temp file and renames into place.
class OutputFile {
 public:
  OutputFile(const std::filesystem::path& path, const ExperimentConfig& c);
  ~OutputFile();
  void line(const std::string& s);
  void close();  // rename into place

 private:
  std::filesystem::path final_path_, tmp_path_;
  std::string buffer_;
  bool open_ = true;
};

extern const char* kCodeVersion;

// CLI entry point; returns the process exit status. On failure prints a
// single-line JSON error document to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace hflab::harness
