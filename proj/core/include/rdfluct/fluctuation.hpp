#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rdfluct/meanfield.hpp"
#include "rdfluct/model.hpp"
#include "rdfluct/rng.hpp"

namespace rdfluct {

/// Raised when the noise covariance cannot be factorized even after jitter
/// escalation.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real trigonometric basis {1, cos(nx), sin(nx)}, n = 1..n_modes, tabulated
/// on the mean-field collocation grid. Slot 0 is the constant; slots 2n-1 and
/// 2n hold cos(nx) and sin(nx).
class FluctuationBasis {
 public:
  FluctuationBasis(std::size_t n_modes, PeriodicGrid grid);

  std::size_t size() const noexcept { return size_; }
  std::size_t modes() const noexcept { return n_modes_; }
  const PeriodicGrid& grid() const noexcept { return grid_; }

  /// grid points x basis functions.
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  /// Analytic derivatives, same layout as values().
  const Eigen::MatrixXd& derivatives() const noexcept { return derivatives_; }
  /// Exact L2 norms squared: 2 pi for the constant, pi otherwise.
  const Eigen::VectorXd& gram() const noexcept { return gram_; }
  double wavenumber(std::size_t p) const noexcept { return static_cast<double>((p + 1) / 2); }

 private:
  std::size_t n_modes_;
  std::size_t size_;
  PeriodicGrid grid_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd derivatives_;
  Eigen::VectorXd gram_;
};

/// Basis coefficients of (Abar, Bbar, Cbar), packed species-major into one
/// vector of length 3P.
struct FluctuationState {
  Eigen::VectorXd coefficients;
  double time = 0.0;

  static FluctuationState zero(std::size_t basis_size) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * basis_size)), 0.0};
  }
  std::size_t basis_size() const noexcept { return static_cast<std::size_t>(coefficients.size()) / 3; }
  auto species(Species s) { return coefficients.segment(static_cast<Eigen::Index>(index(s) * basis_size()), static_cast<Eigen::Index>(basis_size())); }
  auto species(Species s) const { return coefficients.segment(static_cast<Eigen::Index>(index(s) * basis_size()), static_cast<Eigen::Index>(basis_size())); }

  /// <1, sbar>: only the constant basis function has nonzero integral.
  double mass(Species s) const noexcept { return kTwoPi * coefficients[static_cast<Eigen::Index>(index(s) * basis_size())]; }
};

/// Instantaneous covariance density of the projected martingale increments,
/// sigma_{(s,p),(s',p')} = d/dt Cov[<xi^s, f_p>, <xi^s', f_p'>], together with
/// a lower Cholesky factor of sigma + jitter I.
struct NoiseCovariance {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd factor;
  double jitter = 0.0;
  int escalations = 0;

  /// jitter = 1e-12 trace / dim, multiplied by 100 up to three times on failure.
  static NoiseCovariance factorize(Eigen::MatrixXd sigma);
};

/// sqrt(dt) * factor * z with z standard normal, drawn in index order.
Eigen::VectorXd sample_noise_increment(const NoiseCovariance& cov, double dt, RandomStream& rng);

/// Linearized fluctuation system around a mean-field solution, Galerkin
/// projected on a FluctuationBasis (midpoint quadrature on the mean-field grid).
///
///   dAbar = D_A Abar'' - lambda [(K*B) Abar + (K*Bbar) A] + (mu/2)[(K*Cbar) + Cbar] + xi^A
///   dBbar = D_B Bbar'' - lambda [(K*A) Bbar + (K*Abar) B] + (mu/2)[(K*Cbar) + Cbar] + xi^B
///   dCbar = D_C Cbar'' - mu Cbar
///           + (lambda/2)[(K*B) Abar + (K*A) Bbar + (K*Abar) B + (K*Bbar) A] + xi^C
///
/// Noise covariance densities for test functions f, g (B blocks by the A<->B
/// exchange, which swaps the two placement arguments of the unbinding density):
///
///   AA: 2 D_A <A f', g'> + lambda <A (K*B) f, g> + (mu/2) <[(K*C) + C] f, g>
///   BB: 2 D_B <B f', g'> + lambda <B (K*A) f, g> + (mu/2) <[(K*C) + C] f, g>
///   CC: 2 D_C <C f', g'> + mu <C f, g> + (lambda/2) <[A (K*B) + B (K*A)] f, g>
///   AB: lambda <K*(f A), g B> + (mu/2) [<K*(f C), g> + <K*(g C), f>]
///   AC: -(lambda/2) [<A (K*B) f, g> + <f A, K*(g B)>] - (mu/2) [<K*f, C g> + <C f, g>]
///   BC: -(lambda/2) [<B (K*A) f, g> + <f B, K*(g A)>] - (mu/2) [<K*f, C g> + <C f, g>]
class FluctuationModel {
 public:
  FluctuationModel(const MeanFieldSolver& solver, std::size_t n_modes);

  const MeanFieldSolver& solver() const noexcept { return *solver_; }
  const FluctuationBasis& basis() const noexcept { return basis_; }
  std::size_t dimension() const noexcept { return 3 * basis_.size(); }

  /// Time derivative of the coefficients from reaction terms only, evaluated
  /// pointwise on the grid through the spectral convolution.
  Eigen::VectorXd drift(const FluctuationState& state, const MeanFieldState& mf) const;

  /// Dense 3P x 3P matrix J with drift(state) = J * state.coefficients.
  Eigen::MatrixXd drift_operator(const MeanFieldState& mf) const;

  Eigen::MatrixXd covariance_density(const MeanFieldState& mf) const;
  NoiseCovariance assemble_covariance(const MeanFieldState& mf) const {
    return NoiseCovariance::factorize(covariance_density(mf));
  }

  /// 1 / (1 + dt D_s n_p^2) for every packed coefficient.
  Eigen::VectorXd diffusion_factors(double dt) const;

  /// Maps projected noise increments to coefficient increments (divides by the Gram diagonal).
  Eigen::VectorXd to_coefficients(const Eigen::VectorXd& projected) const;

  /// One IMEX Euler step: explicit drift plus increment, then implicit diffusion.
  FluctuationState step_with_increment(const FluctuationState& state, const MeanFieldState& mf, double dt,
                                       const Eigen::VectorXd& projected_increment) const;

  /// Assembles the covariance at mf, draws the increment from rng and steps.
  FluctuationState step(const FluctuationState& state, const MeanFieldState& mf, double dt, RandomStream& rng) const;

 private:
  const MeanFieldSolver* solver_;
  FluctuationBasis basis_;
  Eigen::MatrixXd smoothing_;    // h K, grid x grid
  Eigen::MatrixXd smoothed_basis_;  // h K F
  Eigen::MatrixXd projector_;    // G^-1 h F^T
  Eigen::VectorXd gram_inverse_packed_;
};

/// Mean-field states at every step 0, dt, ..., t_end.
std::vector<MeanFieldState> mean_field_path(const MeanFieldSolver& solver, const MeanFieldState& init, double t_end,
                                            double dt);

struct FluctuationEnsembleOptions {
  std::size_t workers = 1;
  std::size_t covariance_reuse = 1;
  bool zero_noise = false;
  std::size_t block_size = 64;
};

/// Molar-mass samples of (Abar, Bbar, Cbar) per trial and save time, plus the
/// mean-field masses at the same times.
struct FluctuationEnsemble {
  std::vector<double> times;
  std::size_t trials = 0;
  std::vector<std::array<double, kNumSpecies>> bar_mass;         // [trial * times + k]
  std::vector<std::array<double, kNumSpecies>> mean_field_mass;  // [k]
  double wall_seconds = 0.0;

  double bar(std::size_t trial, std::size_t k, Species s) const noexcept {
    return bar_mass[trial * times.size() + k][index(s)];
  }
  /// m_s(t_k) + <1, sbar>(t_k) / sqrt(gamma).
  double composed(std::size_t trial, std::size_t k, Species s, double gamma) const noexcept {
    return mean_field_mass[k][index(s)] + bar(trial, k, s) / std::sqrt(gamma);
  }
  std::vector<double> bar_samples(std::size_t k, Species s) const;
};

/// Independent trials from zero initial data, driven along mf_path (one state
/// per dt step). Trial i uses RandomStream(seed, i), drawing 3P normals per
/// step; results do not depend on the worker count.
FluctuationEnsemble solve_fluctuation_ensemble(const FluctuationModel& model, std::span<const MeanFieldState> mf_path,
                                               double dt, std::span<const double> save_times, std::size_t n_trials,
                                               std::uint64_t seed, const FluctuationEnsembleOptions& options = {});

}  // namespace rdfluct
