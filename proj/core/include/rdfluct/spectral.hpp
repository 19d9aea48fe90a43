#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rdfluct {

/// Real-to-complex FFT pair of fixed size n (even), backed by FFTW.
///
/// Coefficients use the Fourier-series normalization
///   f(x_j) = sum_n c_n e^{i n x_j},  c_n = (1/n) sum_j f(x_j) e^{-i n x_j},
/// stored for n = 0..size/2 (the negative frequencies are their conjugates).
/// Plans are created once; execution is safe from several threads.
class FourierTransform {
 public:
  explicit FourierTransform(std::size_t n);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;
  FourierTransform(FourierTransform&&) noexcept;
  FourierTransform& operator=(FourierTransform&&) noexcept;

  std::size_t size() const noexcept { return n_; }
  std::size_t coefficient_count() const noexcept { return n_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> grid) const;
  std::vector<double> inverse(std::span<const std::complex<double>> coefficients) const;

  /// Signed wavenumber of coefficient slot k (0..size/2).
  static double wavenumber(std::size_t k) noexcept { return static_cast<double>(k); }

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

/// A real periodic field held both as collocation values and Fourier
/// coefficients; the two are kept consistent by construction.
class SpectralField {
 public:
  SpectralField() = default;

  static SpectralField from_grid(const FourierTransform& fft, std::vector<double> values);
  static SpectralField from_coefficients(const FourierTransform& fft, std::vector<std::complex<double>> coefficients);

  std::size_t size() const noexcept { return grid_.size(); }
  std::span<const double> grid_values() const noexcept { return grid_; }
  std::span<const std::complex<double>> coefficients() const noexcept { return coefficients_; }

  /// Midpoint-rule integral over (0, 2 pi).
  double mass() const noexcept;
  double max_abs() const noexcept;
  double min() const noexcept;

 private:
  std::vector<double> grid_;
  std::vector<std::complex<double>> coefficients_;
};

}  // namespace rdfluct
