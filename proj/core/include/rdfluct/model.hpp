#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rdfluct {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Species : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::size_t kNumSpecies = 3;
inline constexpr std::array<Species, kNumSpecies> kAllSpecies{Species::A, Species::B, Species::C};

constexpr std::size_t index(Species s) noexcept { return static_cast<std::size_t>(s); }
std::string_view name(Species s) noexcept;

/// Parameters of the reversible A + B <-> C system on the periodic interval (0, 2 pi).
///
/// Defaults are the reference experiment: D = (1, 0.5, 0.1), lambda = 1,
/// mu = 0.05, epsilon = 2^-7. Bimolecular pair rates carry a factor 1/gamma.
struct ReactionSystem {
  std::array<double, kNumSpecies> diffusivity{1.0, 0.5, 0.1};
  double lambda = 1.0;
  double mu = 0.05;
  double epsilon = 1.0 / 128.0;
  double gamma = 1000.0;
  double domain_length = kTwoPi;

  double D(Species s) const noexcept { return diffusivity[index(s)]; }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Shortest distance between x and y on the circle of circumference 2 pi.
double periodic_distance(double x, double y) noexcept;

/// Wraps x into [0, 2 pi).
double canonical_position(double x) noexcept;

/// Uniform periodic grid x_i = i h, h = 2 pi / n.
struct PeriodicGrid {
  std::size_t n = 0;

  double spacing() const noexcept { return kTwoPi / static_cast<double>(n); }
  double point(std::size_t i) const noexcept { return static_cast<double>(i) * spacing(); }
  std::vector<double> points() const;
};

/// Periodic Gaussian interaction kernel tabulated on a uniform grid.
///
/// The normalization Z is the midpoint-rule mass of the unnormalized Gaussian on
/// the grid itself, so h * sum_i K(x_i, y_j) = 1 for every column j. The table
/// is circulant: K(x_i, x_j) depends only on (i - j) mod n, so only the first
/// column is stored.
class KernelTable {
 public:
  KernelTable(double epsilon, PeriodicGrid grid);

  std::size_t size() const noexcept { return grid_.n; }
  const PeriodicGrid& grid() const noexcept { return grid_; }
  double spacing() const noexcept { return grid_.spacing(); }
  double epsilon() const noexcept { return epsilon_; }
  double normalization() const noexcept { return normalization_; }

  /// True when epsilon < 4h; the table is built regardless.
  bool under_resolved() const noexcept { return under_resolved_; }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    const std::size_t d = i >= j ? i - j : i + grid_.n - j;
    return profile_[d];
  }

  /// K(x_d, x_0) for d = 0..n-1.
  std::span<const double> profile() const noexcept { return profile_; }

  /// h * sum_i K(x_i, x_j).
  double column_mass(std::size_t j) const noexcept;

  Eigen::MatrixXd dense() const;

 private:
  PeriodicGrid grid_;
  double epsilon_;
  double normalization_ = 0.0;
  bool under_resolved_ = false;
  std::vector<double> profile_;
};

KernelTable build_kernel_table(const ReactionSystem& sys, std::size_t n_points);

/// mu * h * sum_i K(x_i, z_k): total unbinding rate of one C in voxel k.
double unbinding_total_rate(const ReactionSystem& sys, const KernelTable& kernel, std::size_t z_index);

/// Initial molar concentration profiles exp(-10 d(x, c)^2) with centers 1 (A),
/// 2 (B) and C = 0, using the periodic distance d.
double initial_concentration(Species s, double x) noexcept;
std::array<std::vector<double>, kNumSpecies> initial_concentrations(const PeriodicGrid& grid);

}  // namespace rdfluct
