#include "rdfluct/crdme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rdfluct {

std::int64_t VoxelState::total(Species s) const noexcept {
  const auto& c = counts[index(s)];
  return std::accumulate(c.begin(), c.end(), std::int64_t{0});
}

CrdmeModel::CrdmeModel(const ReactionSystem& sys, std::size_t n_voxels)
    : sys_(sys), kernel_(build_kernel_table(sys, n_voxels)) {
  sys_.validate();
  const double h = kernel_.spacing();
  for (Species s : kAllSpecies) hop_rate_[index(s)] = sys_.D(s) / (h * h);
  pair_scale_ = sys_.lambda / sys_.gamma;
  unbind_rate_ = unbinding_total_rate(sys_, kernel_, 0);

  const std::size_t n = kernel_.size();
  radius_ = static_cast<std::size_t>(std::ceil(6.0 * sys_.epsilon / h));
  if (2 * radius_ + 1 >= n) {
    radius_ = n / 2;
    for (std::size_t d = 0; d < n; ++d) {
      const auto signed_d = d <= n / 2 ? static_cast<std::ptrdiff_t>(d) : static_cast<std::ptrdiff_t>(d) - static_cast<std::ptrdiff_t>(n);
      offsets_.push_back(signed_d);
    }
  } else {
    const auto r = static_cast<std::ptrdiff_t>(radius_);
    for (std::ptrdiff_t d = -r; d <= r; ++d) offsets_.push_back(d);
  }
  weights_.reserve(offsets_.size());
  for (std::ptrdiff_t d : offsets_) weights_.push_back(kernel_.profile()[wrap(d)]);
}

std::vector<std::int64_t> sample_voxel_counts(std::span<const double> field, double gamma, double h,
                                              RandomStream& rng) {
  std::vector<std::int64_t> counts(field.size(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!(field[i] >= 0.0)) throw std::invalid_argument("initial concentration must be nonnegative");
    double m = gamma * h * field[i];
    // Snap products that are integers up to rounding so they draw no Bernoulli.
    if (std::abs(m - std::round(m)) <= 1e-12 * std::max(1.0, m)) m = std::round(m);
    const double whole = std::floor(m);
    const double frac = m - whole;
    auto count = static_cast<std::int64_t>(whole);
    if (frac > 0.0 && rng.bernoulli(frac)) ++count;
    counts[i] = count;
  }
  return counts;
}

VoxelState init_particles(const CrdmeModel& model, const std::array<std::vector<double>, kNumSpecies>& fields,
                          RandomStream& rng) {
  VoxelState state(model.size());
  for (Species s : kAllSpecies) {
    const auto& f = fields[index(s)];
    if (f.size() != model.size()) throw std::invalid_argument("initial field size does not match the mesh");
    state.counts[index(s)] = sample_voxel_counts(f, model.system().gamma, model.spacing(), rng);
  }
  return state;
}

double bound_partner_density(const CrdmeModel& model, const VoxelState& state, std::size_t voxel) {
  const auto offsets = model.stencil_offsets();
  const auto weights = model.stencil_weights();
  const auto& b = state.counts[index(Species::B)];
  double sum = 0.0;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    sum += weights[k] * static_cast<double>(b[model.wrap(static_cast<std::ptrdiff_t>(voxel) + offsets[k])]);
  }
  return sum;
}

namespace {

double voxel_rate(const CrdmeModel& model, const VoxelState& state, std::size_t voxel, double partner_density) {
  const auto a = static_cast<double>(state(Species::A, voxel));
  const auto b = static_cast<double>(state(Species::B, voxel));
  const auto c = static_cast<double>(state(Species::C, voxel));
  return 2.0 * (a * model.hop_rate(Species::A) + b * model.hop_rate(Species::B) + c * model.hop_rate(Species::C)) +
         a * model.pair_scale() * partner_density + c * model.unbind_rate();
}

}  // namespace

double total_voxel_rate(const CrdmeModel& model, const VoxelState& state, std::size_t voxel) {
  if (voxel >= model.size()) throw std::out_of_range("voxel index out of range");
  return voxel_rate(model, state, voxel, bound_partner_density(model, state, voxel));
}

CrdmeSimulator::CrdmeSimulator(const CrdmeModel& model, VoxelState initial)
    : model_(&model), state_(std::move(initial)), partner_density_(model.size(), 0.0), tree_(model.size()) {
  if (state_.size() != model.size()) throw std::invalid_argument("state size does not match the mesh");
  for (const auto& c : state_.counts) {
    if (std::any_of(c.begin(), c.end(), [](std::int64_t v) { return v < 0; })) {
      throw std::invalid_argument("counts must be nonnegative");
    }
  }
  rebuild();
}

void CrdmeSimulator::rebuild() {
  const std::size_t n = model_->size();
  std::vector<double> leaves(n);
  for (std::size_t i = 0; i < n; ++i) {
    partner_density_[i] = bound_partner_density(*model_, state_, i);
    leaves[i] = voxel_rate(*model_, state_, i, partner_density_[i]);
  }
  tree_.assign(leaves);
}

void CrdmeSimulator::refresh_leaf(std::size_t voxel) {
  tree_.update(voxel, voxel_rate(*model_, state_, voxel, partner_density_[voxel]));
}

void CrdmeSimulator::refresh_partner_densities(std::size_t around) {
  for (std::ptrdiff_t d : model_->stencil_offsets()) {
    const std::size_t m = model_->wrap(static_cast<std::ptrdiff_t>(around) + d);
    partner_density_[m] = bound_partner_density(*model_, state_, m);
    if (state_(Species::A, m) > 0) refresh_leaf(m);
  }
}

std::array<EventChannel, 8> CrdmeSimulator::channels(std::size_t voxel) const {
  std::array<EventChannel, 8> ch;
  std::size_t k = 0;
  for (Species s : kAllSpecies) {
    const double r = static_cast<double>(state_(s, voxel)) * model_->hop_rate(s);
    ch[k++] = {ChannelKind::HopLeft, s, r};
    ch[k++] = {ChannelKind::HopRight, s, r};
  }
  ch[k++] = {ChannelKind::Bind, Species::A,
             static_cast<double>(state_(Species::A, voxel)) * model_->pair_scale() * partner_density_[voxel]};
  ch[k++] = {ChannelKind::Unbind, Species::C, static_cast<double>(state_(Species::C, voxel)) * model_->unbind_rate()};
  return ch;
}

std::optional<Event> CrdmeSimulator::select_event(double u_voxel, double u_channel) const {
  if (!(tree_.total() > 0.0)) return std::nullopt;
  const std::size_t voxel = tree_.select(u_voxel);
  const auto ch = channels(voxel);
  double sum = 0.0;
  for (const auto& c : ch) sum += c.rate;
  double target = u_channel * sum;
  std::size_t pick = ch.size();
  for (std::size_t k = 0; k < ch.size(); ++k) {
    if (ch[k].rate <= 0.0) continue;
    pick = k;
    if (target <= ch[k].rate) break;
    target -= ch[k].rate;
  }
  if (pick == ch.size()) throw ConsistencyError("selected voxel has no active channel");
  return Event{voxel, ch[pick]};
}

namespace {

// Picks an offset index with probability proportional to weights[k] * mass[k].
template <class MassFn>
std::size_t pick_weighted(std::span<const double> weights, MassFn mass, double u) {
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) total += weights[k] * mass(k);
  double target = u * total;
  std::size_t pick = weights.size();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = weights[k] * mass(k);
    if (w <= 0.0) continue;
    pick = k;
    if (target <= w) break;
    target -= w;
  }
  return pick;
}

}  // namespace

void CrdmeSimulator::apply_event(const Event& event, RandomStream& rng) {
  const CrdmeModel& m = *model_;
  const std::size_t i = event.voxel;
  auto take = [&](Species s, std::size_t v) {
    auto& c = state_(s, v);
    if (c <= 0) throw ConsistencyError("event would make a count negative");
    --c;
  };

  switch (event.channel.kind) {
    case ChannelKind::HopLeft:
    case ChannelKind::HopRight: {
      const Species s = event.channel.species;
      const std::ptrdiff_t step = event.channel.kind == ChannelKind::HopLeft ? -1 : 1;
      const std::size_t dst = m.wrap(static_cast<std::ptrdiff_t>(i) + step);
      take(s, i);
      ++state_(s, dst);
      if (s == Species::B) {
        refresh_partner_densities(i);
        refresh_partner_densities(dst);
      }
      refresh_leaf(i);
      refresh_leaf(dst);
      break;
    }
    case ChannelKind::Bind: {
      const auto offsets = m.stencil_offsets();
      const auto& b = state_.counts[index(Species::B)];
      const std::size_t k = pick_weighted(
          m.stencil_weights(),
          [&](std::size_t q) { return static_cast<double>(b[m.wrap(static_cast<std::ptrdiff_t>(i) + offsets[q])]); },
          rng.uniform_open_closed());
      if (k == offsets.size()) throw ConsistencyError("bind event without a partner");
      const std::size_t j = m.wrap(static_cast<std::ptrdiff_t>(i) + offsets[k]);
      const std::size_t product = rng.uniform() < 0.5 ? i : j;
      take(Species::A, i);
      take(Species::B, j);
      ++state_(Species::C, product);
      refresh_partner_densities(j);
      refresh_leaf(i);
      refresh_leaf(j);
      refresh_leaf(product);
      break;
    }
    case ChannelKind::Unbind: {
      const bool a_stays = rng.uniform() < 0.5;
      const auto offsets = m.stencil_offsets();
      const std::size_t k = pick_weighted(m.stencil_weights(), [](std::size_t) { return 1.0; }, rng.uniform_open_closed());
      const std::size_t j = m.wrap(static_cast<std::ptrdiff_t>(i) + offsets[k]);
      take(Species::C, i);
      const std::size_t a_at = a_stays ? i : j;
      const std::size_t b_at = a_stays ? j : i;
      ++state_(Species::A, a_at);
      ++state_(Species::B, b_at);
      refresh_partner_densities(b_at);
      refresh_leaf(i);
      refresh_leaf(j);
      break;
    }
  }
}

std::optional<double> CrdmeSimulator::draw_waiting_time(RandomStream& rng) const {
  const double total = tree_.total();
  if (!(total > 0.0)) return std::nullopt;
  return -std::log(rng.uniform_open_closed()) / total;
}

void CrdmeSimulator::fire(RandomStream& rng, double new_time) {
  const double u_voxel = rng.uniform_open_closed();
  const double u_channel = rng.uniform_open_closed();
  const auto event = select_event(u_voxel, u_channel);
  if (!event) throw ConsistencyError("fire called on an absorbing state");
  apply_event(*event, rng);
  state_.time = new_time;
  ++events_;
}

std::optional<double> CrdmeSimulator::step(RandomStream& rng) {
  const auto tau = draw_waiting_time(rng);
  if (tau) fire(rng, state_.time + *tau);
  return tau;
}

namespace {

CrdmeSnapshot take_snapshot(const CrdmeModel& model, const VoxelState& state, double time, bool concentration) {
  CrdmeSnapshot snap;
  snap.time = time;
  const double gamma = model.system().gamma;
  for (Species s : kAllSpecies) {
    snap.totals[index(s)] = state.total(s);
    snap.molar_mass[index(s)] = static_cast<double>(snap.totals[index(s)]) / gamma;
    if (concentration) {
      auto& field = snap.concentration[index(s)];
      field.resize(state.size());
      const double scale = 1.0 / (gamma * model.spacing());
      for (std::size_t v = 0; v < state.size(); ++v) field[v] = static_cast<double>(state(s, v)) * scale;
    }
  }
  return snap;
}

}  // namespace

CrdmeTrajectory simulate(const CrdmeModel& model, VoxelState init, double t_end, std::span<const double> save_times,
                         RandomStream& rng, const SimulateOptions& options) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (!std::is_sorted(save_times.begin(), save_times.end())) throw std::invalid_argument("save times must be sorted");
  if (!save_times.empty() && (save_times.front() < 0.0 || save_times.back() > t_end)) {
    throw std::invalid_argument("save times must lie in [0, t_end]");
  }

  CrdmeSimulator sim(model, std::move(init));
  CrdmeTrajectory traj;
  traj.snapshots.reserve(save_times.size());
  std::size_t next = 0;
  double t = sim.state().time;
  std::uint64_t since_rebuild = 0;

  while (true) {
    const auto tau = sim.draw_waiting_time(rng);
    const double t_next = tau ? t + *tau : std::numeric_limits<double>::infinity();
    while (next < save_times.size() && save_times[next] < t_next) {
      sim.rebuild();
      traj.snapshots.push_back(take_snapshot(model, sim.state(), save_times[next], options.record_concentration));
      ++next;
    }
    if (!tau) {
      traj.exhausted = true;
      break;
    }
    if (t_next > t_end) break;
    sim.fire(rng, t_next);
    t = t_next;
    if (++since_rebuild == options.rebuild_interval) {
      sim.rebuild();
      since_rebuild = 0;
    }
  }
  traj.events = sim.events();
  return traj;
}

}  // namespace rdfluct
