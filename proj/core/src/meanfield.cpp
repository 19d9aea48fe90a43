#include "rdfluct/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rdfluct {

KernelConvolution::KernelConvolution(const KernelTable& kernel) : fft_(kernel.size()) {
  const auto coeffs = fft_.forward(kernel.profile());
  multiplier_.resize(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) multiplier_[k] = kTwoPi * coeffs[k].real();
}

SpectralField KernelConvolution::apply(const SpectralField& f) const {
  if (f.size() != fft_.size()) throw std::invalid_argument("convolution grid mismatch");
  std::vector<std::complex<double>> c(f.coefficients().begin(), f.coefficients().end());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= multiplier_[k];
  return SpectralField::from_coefficients(fft_, std::move(c));
}

std::vector<double> KernelConvolution::apply(std::span<const double> grid) const {
  if (grid.size() != fft_.size()) throw std::invalid_argument("convolution grid mismatch");
  auto c = fft_.forward(grid);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= multiplier_[k];
  return fft_.inverse(c);
}

SpectralField convolve(const KernelTable& kernel, const SpectralField& f) {
  if (kernel.size() != f.size()) throw std::invalid_argument("kernel and field grids differ");
  return KernelConvolution(kernel).apply(f);
}

MeanFieldSolver::MeanFieldSolver(const ReactionSystem& sys, std::size_t modes)
    : sys_(sys), kernel_(build_kernel_table(sys, modes)), conv_(kernel_) {
  sys_.validate();
}

MeanFieldState MeanFieldSolver::make_state(GridTriple values, double time) const {
  MeanFieldState state;
  state.time = time;
  for (Species s : kAllSpecies) {
    if (values[index(s)].size() != size()) throw std::invalid_argument("field size does not match the grid");
    state.fields[index(s)] = SpectralField::from_grid(fft(), std::move(values[index(s)]));
  }
  return state;
}

MeanFieldState MeanFieldSolver::initial_state() const { return make_state(initial_concentrations(grid()), 0.0); }

GridTriple MeanFieldSolver::rhs(const MeanFieldState& state) const {
  const auto KA = conv_.apply(state[Species::A].grid_values());
  const auto KB = conv_.apply(state[Species::B].grid_values());
  const auto KC = conv_.apply(state[Species::C].grid_values());
  const auto a = state[Species::A].grid_values();
  const auto b = state[Species::B].grid_values();
  const auto c = state[Species::C].grid_values();
  const double lambda = sys_.lambda;
  const double mu = sys_.mu;

  GridTriple r;
  for (auto& v : r) v.resize(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const double unbind = 0.5 * mu * (KC[i] + c[i]);
    r[0][i] = -lambda * KB[i] * a[i] + unbind;
    r[1][i] = -lambda * KA[i] * b[i] + unbind;
    r[2][i] = -mu * c[i] + 0.5 * lambda * (KB[i] * a[i] + KA[i] * b[i]);
  }
  return r;
}

MeanFieldState MeanFieldSolver::step(const MeanFieldState& state, double dt) const {
  const auto r = rhs(state);
  MeanFieldState next;
  next.time = state.time + dt;
  for (Species s : kAllSpecies) {
    const auto u = state[s].grid_values();
    std::vector<double> explicit_part(size());
    for (std::size_t i = 0; i < size(); ++i) explicit_part[i] = u[i] + dt * r[index(s)][i];
    auto c = fft().forward(explicit_part);
    const double D = sys_.D(s);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double n = FourierTransform::wavenumber(k);
      c[k] /= 1.0 + dt * D * n * n;
    }
    next.fields[index(s)] = SpectralField::from_coefficients(fft(), std::move(c));
  }
  return next;
}

std::size_t MeanFieldSolver::steps_to(double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double ratio = t / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw std::invalid_argument("time is not a multiple of dt");
  }
  return static_cast<std::size_t>(rounded);
}

std::vector<MeanFieldState> MeanFieldSolver::solve(const MeanFieldState& init, double t_end, double dt,
                                                   std::span<const double> save_times) const {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (!std::is_sorted(save_times.begin(), save_times.end())) throw std::invalid_argument("save times must be sorted");
  std::vector<std::size_t> save_steps;
  for (double t : save_times) {
    if (t < 0.0 || t > t_end + 1e-12) throw std::invalid_argument("save time outside [0, t_end]");
    save_steps.push_back(steps_to(t, dt));
  }
  const std::size_t total_steps = steps_to(t_end, dt);

  std::vector<MeanFieldState> out;
  out.reserve(save_times.size());
  MeanFieldState state = init;
  std::size_t next = 0;
  for (std::size_t k = 0;; ++k) {
    while (next < save_steps.size() && save_steps[next] == k) {
      MeanFieldState snap = state;
      snap.time = save_times[next];
      out.push_back(std::move(snap));
      ++next;
    }
    if (k == total_steps) break;
    state = step(state, dt);
    state.time = static_cast<double>(k + 1) * dt;
    check_stability(state);
  }
  return out;
}

void check_stability(const MeanFieldState& state, double limit) {
  for (const auto& f : state.fields) {
    for (double v : f.grid_values()) {
      if (!std::isfinite(v) || std::abs(v) > limit) {
        throw NumericalInstability("mean-field solution left the stable range at t = " + std::to_string(state.time));
      }
    }
  }
}

}  // namespace rdfluct
