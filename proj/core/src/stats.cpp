#include "rdfluct/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rdfluct {

void StreamingMoments::add(double x) noexcept {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void StreamingMoments::merge(const StreamingMoments& other) noexcept {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double n = na + nb;
  const double delta = other.mean - mean;
  mean += delta * nb / n;
  m2 += other.m2 + delta * delta * na * nb / n;
  count += other.count;
}

double StreamingMoments::variance() const noexcept {
  return count < 2 ? 0.0 : std::max(0.0, m2 / static_cast<double>(count - 1));
}

double StreamingMoments::mean_error() const noexcept {
  return count < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
}

StreamingMoments StreamingMoments::of(std::span<const double> samples) noexcept {
  StreamingMoments m;
  for (double x : samples) m.add(x);
  return m;
}

VarianceEstimate scaled_variance(const StreamingMoments& moments, double gamma, VarianceMode mode) {
  if (moments.count < 2) throw std::invalid_argument("variance needs at least two samples");
  if (mode == VarianceMode::Crdme && !(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  VarianceEstimate e;
  e.count = moments.count;
  e.variance = moments.variance() * (mode == VarianceMode::Crdme ? gamma : 1.0);
  e.standard_error = e.variance * std::sqrt(2.0 / static_cast<double>(moments.count - 1));
  return e;
}

VarianceEstimate scaled_variance(std::span<const double> samples, double gamma, VarianceMode mode) {
  return scaled_variance(StreamingMoments::of(samples), gamma, mode);
}

double VarianceComparisonRow::gap() const noexcept { return std::abs(spide.variance - crdme.variance); }

double VarianceComparisonRow::combined_error() const noexcept {
  return std::hypot(spide.standard_error, crdme.standard_error);
}

const VarianceComparisonRow& VarianceComparison::at_time(double t, double tol) const {
  for (const auto& r : rows) {
    if (std::abs(r.time - t) <= tol) return r;
  }
  throw std::out_of_range("no comparison row at the requested time");
}

double fit_convergence_rate(std::span<const double> gammas, std::span<const double> gaps) {
  if (gammas.size() != gaps.size()) throw std::invalid_argument("gamma and gap lists differ in length");
  if (gammas.size() < 3) throw std::invalid_argument("convergence fit needs at least three points");
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (!(gaps[i] > 0.0)) throw std::invalid_argument("gap must be positive for a log-log fit");
    sx += std::log(gammas[i]);
    sy += std::log(gaps[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double dx = std::log(gammas[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(gaps[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("convergence fit needs distinct gammas");
  return sxy / sxx;
}

double Histogram::total_mass() const noexcept {
  double s = 0.0;
  for (double d : density) s += d;
  return s * bin_width;
}

Histogram molar_mass_histogram(std::span<const double> samples, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (samples.empty()) throw std::invalid_argument("histogram of an empty sample set");
  // Molar masses are integers over gamma; the small offset keeps k / gamma in bin k.
  std::map<std::int64_t, std::size_t> counts;
  for (double x : samples) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite sample");
    ++counts[static_cast<std::int64_t>(std::floor(x * gamma + 1e-9))];
  }
  Histogram h;
  h.bin_width = 1.0 / gamma;
  h.first_bin = counts.begin()->first;
  const auto last = counts.rbegin()->first;
  h.density.assign(static_cast<std::size_t>(last - h.first_bin + 1), 0.0);
  const double scale = gamma / static_cast<double>(samples.size());
  for (const auto& [k, c] : counts) h.density[static_cast<std::size_t>(k - h.first_bin)] = scale * static_cast<double>(c);
  return h;
}

double normal_cdf(double x, double mean, double sd) noexcept {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

NormalityTest anderson_darling_normal(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 8) throw std::invalid_argument("Anderson-Darling needs at least eight samples");
  const auto m = StreamingMoments::of(samples);
  const double sd = std::sqrt(m.variance());
  if (!(sd > 0.0)) throw std::invalid_argument("Anderson-Darling on a degenerate sample");
  std::vector<double> z(samples.begin(), samples.end());
  std::sort(z.begin(), z.end());
  const double nn = static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = (z[i] - m.mean) / sd;
    const double hi = (z[n - 1 - i] - m.mean) / sd;
    // log Phi and log(1 - Phi) through erfc keep the tails accurate.
    const double log_cdf = std::log(0.5 * std::erfc(-lo / std::sqrt(2.0)));
    const double log_sf = std::log(0.5 * std::erfc(hi / std::sqrt(2.0)));
    s += (2.0 * static_cast<double>(i) + 1.0) * (log_cdf + log_sf);
  }
  NormalityTest t;
  t.statistic = -nn - s / nn;
  const double a = t.statistic * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  t.adjusted = a;
  if (a >= 0.6) {
    t.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  } else if (a >= 0.34) {
    t.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a >= 0.2) {
    t.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else {
    t.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  }
  t.p_value = std::clamp(t.p_value, 0.0, 1.0);
  return t;
}

double ks_distance_normal(std::span<const double> samples, double mean, double sd) {
  if (samples.empty()) throw std::invalid_argument("KS distance of an empty sample set");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = normal_cdf(x[i], mean, sd);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return d;
}

}  // namespace rdfluct
