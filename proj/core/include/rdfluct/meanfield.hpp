#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rdfluct/model.hpp"
#include "rdfluct/spectral.hpp"

namespace rdfluct {

/// Raised when a solver field leaves the stable range.
class NumericalInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean-field molar concentrations of A, B, C at one time.
struct MeanFieldState {
  std::array<SpectralField, kNumSpecies> fields;
  double time = 0.0;

  const SpectralField& operator[](Species s) const noexcept { return fields[index(s)]; }
  double mass(Species s) const noexcept { return fields[index(s)].mass(); }
};

using GridTriple = std::array<std::vector<double>, kNumSpecies>;

/// Midpoint-rule convolution h * sum_j K(x_i, x_j) f(x_j) applied as a
/// diagonal multiplier in Fourier space (the kernel table is circulant).
class KernelConvolution {
 public:
  explicit KernelConvolution(const KernelTable& kernel);

  std::size_t size() const noexcept { return fft_.size(); }
  const FourierTransform& fft() const noexcept { return fft_; }

  /// Real multiplier kappa_n = h * sum_d K(x_d, 0) e^{-i n x_d}.
  std::span<const double> multiplier() const noexcept { return multiplier_; }

  SpectralField apply(const SpectralField& f) const;
  std::vector<double> apply(std::span<const double> grid) const;

 private:
  FourierTransform fft_;
  std::vector<double> multiplier_;
};

/// Free-standing convolution; throws std::invalid_argument on grid mismatch.
SpectralField convolve(const KernelTable& kernel, const SpectralField& f);

/// Fourier spectral / IMEX Euler solver for the mean-field reaction-diffusion
/// system on a grid of `modes` collocation points.
///
///   dA/dt = D_A A'' - lambda (K*B) A + (mu/2) [(K*C) + C]
///   dB/dt = D_B B'' - lambda (K*A) B + (mu/2) [(K*C) + C]
///   dC/dt = D_C C'' - mu C + (lambda/2) [(K*B) A + (K*A) B]
///
/// Reaction terms are formed pointwise at collocation points (no dealiasing)
/// and stepped explicitly; diffusion is implicit per Fourier mode.
class MeanFieldSolver {
 public:
  MeanFieldSolver(const ReactionSystem& sys, std::size_t modes);

  const ReactionSystem& system() const noexcept { return sys_; }
  const KernelTable& kernel() const noexcept { return kernel_; }
  const KernelConvolution& convolution() const noexcept { return conv_; }
  const FourierTransform& fft() const noexcept { return conv_.fft(); }
  PeriodicGrid grid() const noexcept { return kernel_.grid(); }
  std::size_t size() const noexcept { return kernel_.size(); }

  MeanFieldState make_state(GridTriple values, double time = 0.0) const;

  /// Reference initial data evaluated on the collocation grid.
  MeanFieldState initial_state() const;

  SpectralField convolve(const SpectralField& f) const { return conv_.apply(f); }

  /// Reaction right-hand sides at the collocation points (diffusion excluded).
  GridTriple rhs(const MeanFieldState& state) const;

  /// c_new(n) = (c(n) + dt R(n)) / (1 + dt D_s n^2) per mode and species.
  MeanFieldState step(const MeanFieldState& state, double dt) const;

  /// Integrates to t_end and returns the states at save_times. dt must divide
  /// every save time; aborts with NumericalInstability if any |field| > 1e6.
  std::vector<MeanFieldState> solve(const MeanFieldState& init, double t_end, double dt,
                                    std::span<const double> save_times) const;

  /// Number of dt steps that reach time t exactly; throws if t is off-grid.
  static std::size_t steps_to(double t, double dt);

 private:
  ReactionSystem sys_;
  KernelTable kernel_;
  KernelConvolution conv_;
};

/// Throws NumericalInstability if any field is non-finite or exceeds limit.
void check_stability(const MeanFieldState& state, double limit = 1e6);

}  // namespace rdfluct
