#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rdfluct/meanfield.hpp"
#include "rdfluct/rng.hpp"

namespace rdfluct {
namespace {

std::vector<double> direct_convolution(const KernelTable& k, std::span<const double> f) {
  const std::size_t n = k.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += k.spacing() * k(i, j) * f[j];
  return out;
}

GridTriple uniform_fields(std::size_t n, double a, double b, double c) {
  return {std::vector<double>(n, a), std::vector<double>(n, b), std::vector<double>(n, c)};
}

double max_diff(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

TEST(Convolution, MatchesDirectQuadrature) {
  RandomStream rng(1, 0);
  for (std::size_t n : {64u, 128u, 256u}) {
    for (double eps : {1.0 / 128.0, 0.1, 1.0}) {
      const KernelTable k(eps, PeriodicGrid{n});
      std::vector<double> f(n);
      for (auto& v : f) v = rng.uniform() - 0.3;
      const auto fast = KernelConvolution(k).apply(f);
      const auto slow = direct_convolution(k, f);
      double scale = 0.0;
      for (double v : slow) scale = std::max(scale, std::abs(v));
      EXPECT_LT(max_diff(fast, slow), 1e-10 * scale) << "n=" << n << " eps=" << eps;
    }
  }
}

TEST(Convolution, ConstantsAreFixed) {
  const KernelTable k(0.2, PeriodicGrid{64});
  const std::vector<double> f(64, 2.5);
  for (double v : KernelConvolution(k).apply(f)) EXPECT_NEAR(v, 2.5, 1e-13);
}

TEST(Convolution, PointMassGivesKernelColumn) {
  const std::size_t n = 64;
  const KernelTable k(0.2, PeriodicGrid{n});
  std::vector<double> f(n, 0.0);
  f[5] = 1.0 / k.spacing();
  const auto out = KernelConvolution(k).apply(f);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out[i], k(i, 5), 1e-13);
}

TEST(Convolution, GridMismatchThrows) {
  const KernelTable k(0.2, PeriodicGrid{64});
  const FourierTransform fft(32);
  EXPECT_THROW(convolve(k, SpectralField::from_grid(fft, std::vector<double>(32, 1.0))), std::invalid_argument);
}

TEST(SpectralField, RoundTrip) {
  const FourierTransform fft(128);
  RandomStream rng(2, 0);
  std::vector<double> f(128);
  for (auto& v : f) v = rng.normal();
  const auto a = SpectralField::from_grid(fft, f);
  const auto b = SpectralField::from_coefficients(fft, {a.coefficients().begin(), a.coefficients().end()});
  EXPECT_LT(max_diff(a.grid_values(), b.grid_values()), 1e-12);
}

TEST(MeanFieldRhs, ZeroFieldsGiveZero) {
  const MeanFieldSolver s(ReactionSystem{}, 64);
  for (const auto& r : s.rhs(s.make_state(uniform_fields(64, 0, 0, 0))))
    for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(MeanFieldRhs, UniformFieldsReduceToWellMixedKinetics) {
  ReactionSystem sys;
  const MeanFieldSolver s(sys, 64);
  const double a = 0.7, b = 0.4, c = 0.3;
  const auto r = s.rhs(s.make_state(uniform_fields(64, a, b, c)));
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_NEAR(r[0][i], -sys.lambda * a * b + sys.mu * c, 1e-14);
    EXPECT_NEAR(r[1][i], -sys.lambda * a * b + sys.mu * c, 1e-14);
    EXPECT_NEAR(r[2][i], sys.lambda * a * b - sys.mu * c, 1e-14);
  }
}

TEST(MeanFieldRhs, DetailedBalanceEquilibrium) {
  ReactionSystem sys;
  const MeanFieldSolver s(sys, 64);
  const double a = 0.6, b = 0.25;
  const double c = sys.lambda * a * b / sys.mu;
  for (const auto& r : s.rhs(s.make_state(uniform_fields(64, a, b, c))))
    for (double v : r) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(ImexStep, DiffusionOnlyModeDecay) {
  ReactionSystem sys;
  sys.lambda = 0.0;
  sys.mu = 0.0;
  const std::size_t n = 64;
  const MeanFieldSolver s(sys, n);
  GridTriple f = uniform_fields(n, 0, 0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.grid().point(i);
    f[0][i] = std::cos(3 * x);
    f[1][i] = std::sin(2 * x);
    f[2][i] = 1.0 + std::cos(x);
  }
  const double dt = 0.01;
  const auto next = s.step(s.make_state(f), dt);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.grid().point(i);
    EXPECT_NEAR(next[Species::A].grid_values()[i], std::cos(3 * x) / (1 + dt * 1.0 * 9), 1e-14);
    EXPECT_NEAR(next[Species::B].grid_values()[i], std::sin(2 * x) / (1 + dt * 0.5 * 4), 1e-14);
    EXPECT_NEAR(next[Species::C].grid_values()[i], 1.0 + std::cos(x) / (1 + dt * 0.1), 1e-14);
  }
}

TEST(MeanFieldSolve, ConservesStoichiometricMasses) {
  const MeanFieldSolver s(ReactionSystem{}, 256);
  const auto init = s.initial_state();
  const std::vector<double> save{0.0, 0.5, 1.0};
  const auto out = s.solve(init, 1.0, 1e-3, save);
  ASSERT_EQ(out.size(), 3u);
  const double ac = init.mass(Species::A) + init.mass(Species::C);
  const double bc = init.mass(Species::B) + init.mass(Species::C);
  for (const auto& st : out) {
    EXPECT_LT(std::abs(st.mass(Species::A) + st.mass(Species::C) - ac), 1e-8 * std::max(st.time, 1e-3));
    EXPECT_LT(std::abs(st.mass(Species::B) + st.mass(Species::C) - bc), 1e-8 * std::max(st.time, 1e-3));
  }
  EXPECT_GT(out.back().mass(Species::C), 0.0);
}

TEST(MeanFieldSolve, ReferenceSolutionStaysNonnegative) {
  const MeanFieldSolver s(ReactionSystem{}, 512);
  std::vector<double> save;
  for (int k = 0; k <= 20; ++k) save.push_back(0.05 * k);
  for (const auto& st : s.solve(s.initial_state(), 1.0, 1e-3, save))
    for (const auto& f : st.fields) EXPECT_GE(f.min(), -1e-6);
}

std::array<double, 3> well_mixed_rk4(const ReactionSystem& sys, std::array<double, 3> u, double t, double dt) {
  auto f = [&](const std::array<double, 3>& v) {
    const double r = sys.lambda * v[0] * v[1] - sys.mu * v[2];
    return std::array<double, 3>{-r, -r, r};
  };
  const auto steps = static_cast<long>(std::llround(t / dt));
  for (long k = 0; k < steps; ++k) {
    std::array<double, 3> k1 = f(u), k2{}, k3{}, k4{}, w{};
    for (int i = 0; i < 3; ++i) w[i] = u[i] + 0.5 * dt * k1[i];
    k2 = f(w);
    for (int i = 0; i < 3; ++i) w[i] = u[i] + 0.5 * dt * k2[i];
    k3 = f(w);
    for (int i = 0; i < 3; ++i) w[i] = u[i] + dt * k3[i];
    k4 = f(w);
    for (int i = 0; i < 3; ++i) u[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return u;
}

TEST(MeanFieldSolve, UniformDataFollowsWellMixedOde) {
  ReactionSystem sys;
  sys.lambda = 2.0;
  sys.mu = 0.5;
  const MeanFieldSolver s(sys, 32);
  const auto exact = well_mixed_rk4(sys, {1.0, 0.5, 0.2}, 1.0, 1e-6);
  const std::vector<double> save{1.0};
  double prev_err = 0.0;
  for (double dt : {1e-3, 5e-4}) {
    const auto st = s.solve(s.make_state(uniform_fields(32, 1.0, 0.5, 0.2)), 1.0, dt, save).back();
    double err = 0.0;
    for (Species sp : kAllSpecies)
      err = std::max(err, std::abs(st[sp].grid_values()[7] - exact[index(sp)]));
    EXPECT_LT(err, 1e-3 * dt / 1e-3);
    if (prev_err > 0.0) EXPECT_NEAR(prev_err / err, 2.0, 0.2);
    prev_err = err;
  }
}

TEST(MeanFieldSolve, FirstOrderInTime) {
  const MeanFieldSolver s(ReactionSystem{}, 128);
  const std::vector<double> save{1.0};
  std::vector<MeanFieldState> sols;
  for (double dt : {4e-3, 2e-3, 1e-3}) sols.push_back(s.solve(s.initial_state(), 1.0, dt, save).back());
  auto dist = [](const MeanFieldState& x, const MeanFieldState& y) {
    double d = 0.0;
    for (Species sp : kAllSpecies) d = std::max(d, max_diff(x[sp].grid_values(), y[sp].grid_values()));
    return d;
  };
  EXPECT_NEAR(dist(sols[0], sols[1]) / dist(sols[1], sols[2]), 2.0, 0.2);
}

TEST(MeanFieldSolve, RejectsOffGridSaveTimes) {
  const MeanFieldSolver s(ReactionSystem{}, 32);
  const std::vector<double> save{0.0105};
  EXPECT_THROW(s.solve(s.initial_state(), 1.0, 1e-3, save), std::invalid_argument);
}

TEST(MeanFieldSolve, BlowUpRaisesInstability) {
  ReactionSystem sys;
  sys.lambda = 1e4;
  const MeanFieldSolver s(sys, 32);
  const std::vector<double> save{1.0};
  EXPECT_THROW(s.solve(s.make_state(uniform_fields(32, 1.0, 2.0, 0.0)), 1.0, 0.1, save), NumericalInstability);
}

}  // namespace
}  // namespace rdfluct
