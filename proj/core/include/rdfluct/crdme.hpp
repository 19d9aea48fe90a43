#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rdfluct/model.hpp"
#include "rdfluct/rate_hierarchy.hpp"
#include "rdfluct/rng.hpp"

namespace rdfluct {

/// Particle counts per species per voxel.
struct VoxelState {
  std::array<std::vector<std::int64_t>, kNumSpecies> counts;
  double time = 0.0;

  explicit VoxelState(std::size_t n_voxels = 0) {
    for (auto& c : counts) c.assign(n_voxels, 0);
  }

  std::size_t size() const noexcept { return counts[0].size(); }
  std::int64_t& operator()(Species s, std::size_t voxel) { return counts[index(s)][voxel]; }
  std::int64_t operator()(Species s, std::size_t voxel) const { return counts[index(s)][voxel]; }
  std::int64_t total(Species s) const noexcept;
};

/// Thrown when an event would drive a count negative.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ChannelKind : std::uint8_t { HopLeft, HopRight, Bind, Unbind };

struct EventChannel {
  ChannelKind kind = ChannelKind::HopLeft;
  Species species = Species::A;  // hopping species; unused for reactions
  double rate = 0.0;
};

/// A selected event: the voxel and channel, plus the placement decisions
/// resolved when the event is applied.
struct Event {
  std::size_t voxel = 0;
  EventChannel channel;
};

/// Immutable CRDME rate description on a uniform periodic mesh.
///
/// Hop rate per particle and direction is D_s / h^2; an A in voxel i and a B in
/// voxel j bind at rate lambda K(x_i, x_j) / gamma; a C unbinds at rate
/// mu h sum_i K(x_i, z). Pair sums use the kernel truncated to offsets within
/// 6 epsilon (or the whole column when that covers the mesh).
class CrdmeModel {
 public:
  CrdmeModel(const ReactionSystem& sys, std::size_t n_voxels);

  const ReactionSystem& system() const noexcept { return sys_; }
  const KernelTable& kernel() const noexcept { return kernel_; }
  std::size_t size() const noexcept { return kernel_.size(); }
  double spacing() const noexcept { return kernel_.spacing(); }

  double hop_rate(Species s) const noexcept { return hop_rate_[index(s)]; }
  double pair_rate(std::size_t i, std::size_t j) const noexcept { return pair_scale_ * kernel_(i, j); }
  double pair_scale() const noexcept { return pair_scale_; }
  double unbind_rate() const noexcept { return unbind_rate_; }

  /// Signed voxel offsets of the truncated kernel, each residue mod N once.
  std::span<const std::ptrdiff_t> stencil_offsets() const noexcept { return offsets_; }
  /// Kernel values matching stencil_offsets().
  std::span<const double> stencil_weights() const noexcept { return weights_; }
  std::size_t stencil_radius() const noexcept { return radius_; }

  std::size_t wrap(std::ptrdiff_t i) const noexcept {
    const auto n = static_cast<std::ptrdiff_t>(size());
    i %= n;
    return static_cast<std::size_t>(i < 0 ? i + n : i);
  }

 private:
  ReactionSystem sys_;
  KernelTable kernel_;
  std::array<double, kNumSpecies> hop_rate_{};
  double pair_scale_ = 0.0;
  double unbind_rate_ = 0.0;
  std::size_t radius_ = 0;
  std::vector<std::ptrdiff_t> offsets_;
  std::vector<double> weights_;
};

/// count = floor(gamma h f) + Bernoulli(frac(gamma h f)) per voxel.
std::vector<std::int64_t> sample_voxel_counts(std::span<const double> field, double gamma, double h,
                                              RandomStream& rng);

/// Draws A, B, C counts in that order.
VoxelState init_particles(const CrdmeModel& model, const std::array<std::vector<double>, kNumSpecies>& fields,
                          RandomStream& rng);

/// Sum of K(x_i, x_j) b_j over the kernel stencil of voxel i.
double bound_partner_density(const CrdmeModel& model, const VoxelState& state, std::size_t voxel);

/// Total event rate of one voxel, computed directly from the counts.
double total_voxel_rate(const CrdmeModel& model, const VoxelState& state, std::size_t voxel);

/// Direct-method SSA over the rate hierarchy.
///
/// Random draws are consumed in a fixed order per event: waiting time, voxel,
/// channel, then placement (bind: partner voxel, product voxel; unbind: which
/// product stays, partner voxel).
class CrdmeSimulator {
 public:
  CrdmeSimulator(const CrdmeModel& model, VoxelState initial);

  const VoxelState& state() const noexcept { return state_; }
  const RateHierarchy& tree() const noexcept { return tree_; }
  const CrdmeModel& model() const noexcept { return *model_; }
  std::uint64_t events() const noexcept { return events_; }

  /// Channel rates of one voxel in a fixed order: A, B, C hops (left, right
  /// each), bind, unbind.
  std::array<EventChannel, 8> channels(std::size_t voxel) const;

  /// Voxel by binary descent with u_voxel, channel within the voxel with
  /// u_channel; both in (0, 1]. Empty when the total rate is zero.
  std::optional<Event> select_event(double u_voxel, double u_channel) const;

  /// Applies the event, drawing placement decisions from rng, and refreshes
  /// every affected rate.
  void apply_event(const Event& event, RandomStream& rng);

  /// Recomputes partner densities, leaf rates and the hierarchy from counts.
  void rebuild();

  /// Exponential waiting time with rate tree().total(); nullopt when the state
  /// is absorbing. Consumes one draw.
  std::optional<double> draw_waiting_time(RandomStream& rng) const;

  /// Selects and applies one event (voxel, channel and placement draws) and
  /// sets the state time to new_time.
  void fire(RandomStream& rng, double new_time);

  /// draw_waiting_time followed by fire; returns the waiting time taken.
  std::optional<double> step(RandomStream& rng);

 private:
  void refresh_leaf(std::size_t voxel);
  void refresh_partner_densities(std::size_t around);

  const CrdmeModel* model_;
  VoxelState state_;
  std::vector<double> partner_density_;
  RateHierarchy tree_;
  std::uint64_t events_ = 0;
};

struct CrdmeSnapshot {
  double time = 0.0;
  std::array<double, kNumSpecies> molar_mass{};
  std::array<std::int64_t, kNumSpecies> totals{};
  std::array<std::vector<double>, kNumSpecies> concentration;  // empty unless requested
};

struct CrdmeTrajectory {
  std::vector<CrdmeSnapshot> snapshots;
  std::uint64_t events = 0;
  bool exhausted = false;
};

struct SimulateOptions {
  bool record_concentration = false;
  std::uint64_t rebuild_interval = 1'000'000;
};

/// Runs the SSA from init to t_end and records a snapshot at each save time.
CrdmeTrajectory simulate(const CrdmeModel& model, VoxelState init, double t_end, std::span<const double> save_times,
                         RandomStream& rng, const SimulateOptions& options = {});

}  // namespace rdfluct
