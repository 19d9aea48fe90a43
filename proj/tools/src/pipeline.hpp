#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "rdfluct/config.hpp"

namespace rdfluct::tools {

/// An input file produced by an earlier stage is absent or unreadable.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Process exit codes of the rdfluct front-end.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigInvalid = 2,
  kMissingArtifact = 3,
  kInstability = 4,
};

/// Settings shared by every stage after command-line overrides.
struct StageContext {
  RunConfig config;
  std::filesystem::path out;
  std::string build_id;
  bool quiet = false;
};

std::string build_id();

/// "snap_0.050.csv" style names; three decimals cover the 0.05 save grid.
std::string snapshot_name(double t);
/// "gamma_500" style directory names.
std::string gamma_dir(double gamma);

/// meanfield/masses.csv (time, mass_A, mass_B, mass_C) and
/// meanfield/snap_<t>.csv (x, A, B, C) at every save time.
void run_meanfield(const StageContext& ctx);

/// crdme/gamma_<g>/masses.csv rows (trial_id, time, species, molar_mass) for
/// every configured gamma, optionally crdme/gamma_<g>/run_<id>/snap_<t>.csv
/// rows (voxel, A, B, C) in molar concentration.
void run_crdme(const StageContext& ctx);

/// Reads meanfield/snap_0.000.csv, re-integrates the mean field and writes
/// fluctuation/samples.csv (trial_id, time, mass_Abar, mass_Bbar, mass_Cbar)
/// and fluctuation/composed_gamma_<g>.csv (trial_id, time, mass_Agamma,
/// mass_Bgamma, mass_Cgamma).
void run_fluctuation(const StageContext& ctx);

/// Writes comparison.csv, histogram.csv and rates.csv from the fluctuation
/// samples and every CRDME gamma directory present.
void run_compare(const StageContext& ctx);

/// Writes figures/spec.json and runs the figure script on it; returns the
/// script's exit status.
int run_report(const StageContext& ctx, const std::string& python);

void write_manifest(const StageContext& ctx, const std::string& stage, const std::filesystem::path& dir,
                    double wall_seconds);

}  // namespace rdfluct::tools
