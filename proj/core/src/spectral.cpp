#include "rdfluct/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "rdfluct/model.hpp"

namespace rdfluct {
namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FourierTransform::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

FourierTransform::FourierTransform(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("FFT size must be even and >= 2");
  const int size = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  {
    std::lock_guard lock(planner_mutex());
    plans_->r2c = fftw_plan_dft_r2c_1d(size, real, spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->c2r = fftw_plan_dft_c2r_1d(size, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_free(real);
  fftw_free(spec);
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("FFTW planning failed");
}

FourierTransform::~FourierTransform() = default;
FourierTransform::FourierTransform(FourierTransform&&) noexcept = default;
FourierTransform& FourierTransform::operator=(FourierTransform&&) noexcept = default;

std::vector<std::complex<double>> FourierTransform::forward(std::span<const double> grid) const {
  if (grid.size() != n_) throw std::invalid_argument("FFT input size mismatch");
  std::vector<double> in(grid.begin(), grid.end());
  std::vector<std::complex<double>> out(coefficient_count());
  fftw_execute_dft_r2c(plans_->r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& c : out) c *= scale;
  return out;
}

std::vector<double> FourierTransform::inverse(std::span<const std::complex<double>> coefficients) const {
  if (coefficients.size() != coefficient_count()) throw std::invalid_argument("FFT coefficient size mismatch");
  // c2r destroys its input.
  std::vector<std::complex<double>> in(coefficients.begin(), coefficients.end());
  std::vector<double> out(n_);
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  return out;
}

SpectralField SpectralField::from_grid(const FourierTransform& fft, std::vector<double> values) {
  SpectralField f;
  f.coefficients_ = fft.forward(values);
  f.grid_ = std::move(values);
  return f;
}

SpectralField SpectralField::from_coefficients(const FourierTransform& fft,
                                               std::vector<std::complex<double>> coefficients) {
  SpectralField f;
  f.grid_ = fft.inverse(coefficients);
  f.coefficients_ = std::move(coefficients);
  return f;
}

double SpectralField::mass() const noexcept {
  double sum = 0.0;
  for (double v : grid_) sum += v;
  return grid_.empty() ? 0.0 : sum * kTwoPi / static_cast<double>(grid_.size());
}

double SpectralField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : grid_) m = std::max(m, std::abs(v));
  return m;
}

double SpectralField::min() const noexcept {
  return grid_.empty() ? 0.0 : *std::min_element(grid_.begin(), grid_.end());
}

}  // namespace rdfluct
