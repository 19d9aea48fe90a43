#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rdfluct/model.hpp"

namespace rdfluct {

/// Raised for malformed or invalid configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NumericsConfig {
  std::size_t voxels = 1024;       // CRDME mesh size
  std::size_t modes = 512;         // mean-field collocation points / Fourier modes
  std::size_t basis_modes = 30;    // fluctuation basis {1, cos nx, sin nx}, n <= basis_modes
  double dt = 1e-3;
  double t_end = 1.0;
  double save_interval = 0.05;
  std::size_t covariance_reuse = 1;  // re-assemble the noise covariance every k steps

  std::vector<double> save_times() const;
};

struct EnsembleConfig {
  std::size_t crdme_trials = 1000;
  std::size_t spide_trials = 10000;
  std::uint64_t master_seed = 20240501;
  std::size_t workers = 1;
  std::vector<double> gammas{250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0};
};

struct OutputConfig {
  std::string directory = "out";
  bool snapshots = false;  // per-voxel CRDME snapshot files
  std::string report_script = "figures/render.py";
};

/// Full batch configuration. The INI layout has sections [species], [reaction],
/// [domain], [numerics], [ensemble] and [output].
struct RunConfig {
  ReactionSystem system;
  NumericsConfig numerics;
  EnsembleConfig ensemble;
  OutputConfig output;

  void validate() const;
};

RunConfig parse_config(std::string_view ini_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical INI text; parse_config(to_ini(c)) reproduces c exactly.
std::string to_ini(const RunConfig& config);

/// FNV-1a 64 of the canonical INI text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace rdfluct
