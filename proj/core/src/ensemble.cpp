#include "rdfluct/ensemble.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace rdfluct {

std::vector<double> CrdmeEnsemble::mass_samples(std::size_t k, Species s) const {
  std::vector<double> out(trials);
  for (std::size_t i = 0; i < trials; ++i) out[i] = mass(i, k, s);
  return out;
}

std::size_t CrdmeEnsemble::conservation_violations() const noexcept {
  const std::size_t T = times.size();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    if (T == 0) break;
    const auto& first = totals[i * T];
    for (std::size_t k = 1; k < T; ++k) {
      const auto& t = totals[i * T + k];
      if (t[0] + t[2] != first[0] + first[2] || t[1] + t[2] != first[1] + first[2]) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

CrdmeEnsemble run_crdme_ensemble(const CrdmeModel& model, const std::array<std::vector<double>, kNumSpecies>& fields,
                                 double t_end, std::span<const double> save_times, std::size_t n_trials,
                                 std::uint64_t seed, const CrdmeEnsembleOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t T = save_times.size();
  CrdmeEnsemble out;
  out.times.assign(save_times.begin(), save_times.end());
  out.trials = n_trials;
  out.molar_mass.resize(n_trials * T);
  out.totals.resize(n_trials * T);
  std::vector<std::uint64_t> events(n_trials, 0);
  std::vector<char> exhausted(n_trials, 0);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;

  auto worker = [&] {
    for (;;) {
      if (failed) return;
      const std::size_t i = next++;
      if (i >= n_trials) return;
      try {
        RandomStream rng(seed, i);
        auto init = init_particles(model, fields, rng);
        const auto traj = simulate(model, std::move(init), t_end, save_times, rng, options.simulate);
        for (std::size_t k = 0; k < T; ++k) {
          out.molar_mass[i * T + k] = traj.snapshots[k].molar_mass;
          out.totals[i * T + k] = traj.snapshots[k].totals;
        }
        events[i] = traj.events;
        exhausted[i] = traj.exhausted ? 1 : 0;
        if (options.on_trial) {
          std::lock_guard lock(mutex);
          options.on_trial(i, traj);
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n_trials));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t i = 0; i < n_trials; ++i) {
    out.events += events[i];
    out.exhausted_trials += static_cast<std::size_t>(exhausted[i]);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::uint64_t crdme_seed(std::uint64_t master_seed, double gamma) noexcept {
  return derive_seed(master_seed, std::bit_cast<std::uint64_t>(gamma));
}

std::uint64_t spide_seed(std::uint64_t master_seed) noexcept { return derive_seed(master_seed, 0x5350494445ULL); }

std::vector<StreamingMoments> crdme_moments(const CrdmeEnsemble& ensemble, Species s) {
  std::vector<StreamingMoments> m(ensemble.times.size());
  for (std::size_t i = 0; i < ensemble.trials; ++i) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k].add(ensemble.mass(i, k, s));
  }
  return m;
}

std::vector<StreamingMoments> spide_moments(const FluctuationEnsemble& ensemble, Species s) {
  std::vector<StreamingMoments> m(ensemble.times.size());
  for (std::size_t i = 0; i < ensemble.trials; ++i) {
    for (std::size_t k = 0; k < m.size(); ++k) m[k].add(ensemble.bar(i, k, s));
  }
  return m;
}

VarianceComparison compare_variances(std::span<const double> times, std::span<const StreamingMoments> spide,
                                     std::span<const StreamingMoments> crdme, double gamma) {
  if (spide.size() != times.size() || crdme.size() != times.size()) {
    throw std::invalid_argument("variance series do not match the time grid");
  }
  VarianceComparison cmp;
  for (std::size_t k = 0; k < times.size(); ++k) {
    VarianceComparisonRow row;
    row.time = times[k];
    row.gamma = gamma;
    row.spide = scaled_variance(spide[k], gamma, VarianceMode::Spide);
    row.crdme = scaled_variance(crdme[k], gamma, VarianceMode::Crdme);
    cmp.rows.push_back(row);
  }
  return cmp;
}

}  // namespace rdfluct
