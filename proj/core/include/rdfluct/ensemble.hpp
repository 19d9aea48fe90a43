#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rdfluct/crdme.hpp"
#include "rdfluct/fluctuation.hpp"
#include "rdfluct/model.hpp"
#include "rdfluct/stats.hpp"

namespace rdfluct {

struct CrdmeEnsembleOptions {
  std::size_t workers = 1;
  SimulateOptions simulate;
  /// Called once per finished trial, serialized, in completion order.
  std::function<void(std::size_t trial, const CrdmeTrajectory&)> on_trial;
};

/// Molar masses and particle totals per trial and save time.
struct CrdmeEnsemble {
  std::vector<double> times;
  std::size_t trials = 0;
  std::vector<std::array<double, kNumSpecies>> molar_mass;    // [trial * times + k]
  std::vector<std::array<std::int64_t, kNumSpecies>> totals;  // [trial * times + k]
  std::uint64_t events = 0;
  std::size_t exhausted_trials = 0;
  double wall_seconds = 0.0;

  double mass(std::size_t trial, std::size_t k, Species s) const noexcept {
    return molar_mass[trial * times.size() + k][index(s)];
  }
  std::vector<double> mass_samples(std::size_t k, Species s) const;

  /// Trials whose N_A + N_C or N_B + N_C changed at some save time.
  std::size_t conservation_violations() const noexcept;
};

/// Runs n_trials independent CRDME trials from the concentration fields
/// sampled on the voxel grid. Trial i draws its initial particles and its SSA
/// path from RandomStream(seed, i), so results do not depend on the worker
/// count or scheduling.
CrdmeEnsemble run_crdme_ensemble(const CrdmeModel& model, const std::array<std::vector<double>, kNumSpecies>& fields,
                                 double t_end, std::span<const double> save_times, std::size_t n_trials,
                                 std::uint64_t seed, const CrdmeEnsembleOptions& options = {});

/// Per-gamma stream seed for the CRDME ensemble.
std::uint64_t crdme_seed(std::uint64_t master_seed, double gamma) noexcept;
/// Stream seed for the SPIDE ensemble.
std::uint64_t spide_seed(std::uint64_t master_seed) noexcept;

/// Moments of one species' molar mass per save time.
std::vector<StreamingMoments> crdme_moments(const CrdmeEnsemble& ensemble, Species s);
std::vector<StreamingMoments> spide_moments(const FluctuationEnsemble& ensemble, Species s);

/// Row-wise V_SPIDE against gamma V_CRDME for matching save times.
VarianceComparison compare_variances(std::span<const double> times, std::span<const StreamingMoments> spide,
                                     std::span<const StreamingMoments> crdme, double gamma);

}  // namespace rdfluct
