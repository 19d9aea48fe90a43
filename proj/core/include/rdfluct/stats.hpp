#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rdfluct {

/// Running count, mean and sum of squared deviations (Welford), mergeable
/// with the pairwise update of Chan et al.
struct StreamingMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept;
  void merge(const StreamingMoments& other) noexcept;

  /// Unbiased sample variance; 0 when count < 2.
  double variance() const noexcept;
  /// Standard error of the mean.
  double mean_error() const noexcept;

  static StreamingMoments of(std::span<const double> samples) noexcept;
};

enum class VarianceMode {
  Crdme,  ///< molar-mass samples, multiplied by gamma
  Spide,  ///< fluctuation samples, already on the gamma-scaled level
};

struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Unbiased variance of samples (times gamma in Crdme mode) with the
/// normal-theory error sqrt(2 / (n - 1)) * variance. Needs >= 2 samples.
VarianceEstimate scaled_variance(std::span<const double> samples, double gamma, VarianceMode mode);
VarianceEstimate scaled_variance(const StreamingMoments& moments, double gamma, VarianceMode mode);

struct VarianceComparisonRow {
  double time = 0.0;
  VarianceEstimate spide;
  VarianceEstimate crdme;  ///< already gamma-scaled
  double gamma = 0.0;

  double gap() const noexcept;
  /// sqrt(se_spide^2 + se_crdme^2).
  double combined_error() const noexcept;
};

struct VarianceComparison {
  std::vector<VarianceComparisonRow> rows;

  const VarianceComparisonRow& at_time(double t, double tol = 1e-9) const;
};

/// Least-squares slope of log(gap) against log(gamma). Needs >= 3 pairs and
/// positive gammas and gaps.
double fit_convergence_rate(std::span<const double> gammas, std::span<const double> gaps);

/// Density histogram with bins [k / gamma, (k + 1) / gamma).
struct Histogram {
  double bin_width = 0.0;
  std::int64_t first_bin = 0;
  std::vector<double> density;

  double bin_left(std::size_t i) const noexcept {
    return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * bin_width;
  }
  /// sum density * bin_width.
  double total_mass() const noexcept;
};

Histogram molar_mass_histogram(std::span<const double> samples, double gamma);

struct NormalityTest {
  double statistic = 0.0;  ///< A^2
  double adjusted = 0.0;   ///< A^2 (1 + 0.75/n + 2.25/n^2)
  double p_value = 0.0;
};

/// Anderson-Darling test against a normal law with mean and variance
/// estimated from the sample; p-value from the D'Agostino-Stephens fit.
NormalityTest anderson_darling_normal(std::span<const double> samples);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0) noexcept;

/// sup_x |F_n(x) - Phi((x - mean) / sd)|.
double ks_distance_normal(std::span<const double> samples, double mean, double sd);

}  // namespace rdfluct
