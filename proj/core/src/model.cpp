#include "rdfluct/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdfluct {

std::string_view name(Species s) noexcept {
  switch (s) {
    case Species::A: return "A";
    case Species::B: return "B";
    case Species::C: return "C";
  }
  return "?";
}

void ReactionSystem::validate() const {
  for (std::size_t s = 0; s < kNumSpecies; ++s) {
    if (!(diffusivity[s] >= 0.0) || !std::isfinite(diffusivity[s])) {
      throw std::invalid_argument("diffusivity of species " + std::string(name(kAllSpecies[s])) +
                                  " must be finite and nonnegative");
    }
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be nonnegative");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be positive");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be >= 1");
  if (domain_length != kTwoPi) throw std::invalid_argument("domain length must be 2 pi");
}

double canonical_position(double x) noexcept {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double periodic_distance(double x, double y) noexcept {
  const double d = std::abs(canonical_position(x) - canonical_position(y));
  return std::min(d, kTwoPi - d);
}

std::vector<double> PeriodicGrid::points() const {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = point(i);
  return x;
}

KernelTable::KernelTable(double epsilon, PeriodicGrid grid) : grid_(grid), epsilon_(epsilon) {
  if (grid_.n < 2) throw std::invalid_argument("kernel grid needs at least 2 points");
  if (!(epsilon > 0.0)) throw std::invalid_argument("kernel width must be positive");

  const double h = grid_.spacing();
  under_resolved_ = epsilon < 4.0 * h;

  const double gauss_norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * epsilon * epsilon);
  profile_.resize(grid_.n);
  for (std::size_t d = 0; d < grid_.n; ++d) {
    const double r = periodic_distance(grid_.point(d), 0.0);
    profile_[d] = gauss_norm * std::exp(-r * r / (2.0 * epsilon * epsilon));
  }

  double mass = 0.0;
  for (double v : profile_) mass += v;
  normalization_ = h * mass;
  for (double& v : profile_) v /= normalization_;
}

double KernelTable::column_mass(std::size_t j) const noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid_.n; ++i) sum += (*this)(i, j);
  return grid_.spacing() * sum;
}

Eigen::MatrixXd KernelTable::dense() const {
  const auto n = static_cast<Eigen::Index>(grid_.n);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, j) = (*this)(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return k;
}

KernelTable build_kernel_table(const ReactionSystem& sys, std::size_t n_points) {
  return KernelTable(sys.epsilon, PeriodicGrid{n_points});
}

double unbinding_total_rate(const ReactionSystem& sys, const KernelTable& kernel, std::size_t z_index) {
  if (z_index >= kernel.size()) throw std::out_of_range("voxel index out of range");
  return sys.mu * kernel.column_mass(z_index);
}

double initial_concentration(Species s, double x) noexcept {
  switch (s) {
    case Species::A: {
      const double d = periodic_distance(x, 1.0);
      return std::exp(-10.0 * d * d);
    }
    case Species::B: {
      const double d = periodic_distance(x, 2.0);
      return std::exp(-10.0 * d * d);
    }
    case Species::C: return 0.0;
  }
  return 0.0;
}

std::array<std::vector<double>, kNumSpecies> initial_concentrations(const PeriodicGrid& grid) {
  std::array<std::vector<double>, kNumSpecies> fields;
  for (Species s : kAllSpecies) {
    auto& f = fields[index(s)];
    f.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) f[i] = initial_concentration(s, grid.point(i));
  }
  return fields;
}

}  // namespace rdfluct
