#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "master_equation.hpp"

#include "rdfluct/crdme.hpp"

namespace rdfluct {
namespace {

using oracle::Counts;

void expect_matches_master_equation(const ReactionSystem& sys, Counts init, std::size_t trials) {
  const auto cmp = oracle::compare_two_voxel(sys, init, trials);
  EXPECT_EQ(cmp.unmatched, 0u);
  for (std::size_t s = 0; s < cmp.exact.size(); ++s) {
    EXPECT_NEAR(cmp.empirical[s], cmp.exact[s], 4 * cmp.sigma[s]) << "state " << s;
  }
}

ReactionSystem small_system() {
  ReactionSystem sys;
  sys.gamma = 1.0;
  sys.lambda = 2.0;
  sys.mu = 1.0;
  sys.epsilon = 1.0;
  return sys;
}

TEST(SampleVoxelCounts, ExactAndZeroCounts) {
  RandomStream rng(1, 0);
  const std::vector<double> f{0.0, 3.0, 0.0};
  for (int k = 0; k < 100; ++k) {
    const auto c = sample_voxel_counts(f, 1.0, 1.0, rng);
    EXPECT_EQ(c[0], 0);
    EXPECT_EQ(c[1], 3);
  }
}

TEST(SampleVoxelCounts, BernoulliMean) {
  RandomStream rng(2, 0);
  const std::vector<double> f{2.3};
  const int n = 100000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto c = sample_voxel_counts(f, 1.0, 1.0, rng)[0];
    ASSERT_TRUE(c == 2 || c == 3);
    sum += static_cast<double>(c);
  }
  const double p = 2.3 - 2.0;
  EXPECT_NEAR(sum / n, 2.3, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(SampleVoxelCounts, RejectsNegativeField) {
  RandomStream rng(3, 0);
  const std::vector<double> f{1.0, -0.1};
  EXPECT_THROW(sample_voxel_counts(f, 10.0, 0.1, rng), std::invalid_argument);
}

TEST(TotalVoxelRate, EmptyVoxelIsZero) {
  const CrdmeModel m(ReactionSystem{}, 16);
  EXPECT_EQ(total_voxel_rate(m, VoxelState(16), 3), 0.0);
}

TEST(TotalVoxelRate, LoneParticleHopsBothWays) {
  const CrdmeModel m(ReactionSystem{}, 4);
  VoxelState s(4);
  s(Species::A, 1) = 1;
  EXPECT_NEAR(total_voxel_rate(m, s, 1), 8.0 / (std::numbers::pi * std::numbers::pi), 1e-14);
}

TEST(TotalVoxelRate, MatchesBruteForceEnumeration) {
  ReactionSystem sys;
  sys.epsilon = 0.3;
  sys.gamma = 3.0;
  sys.lambda = 1.5;
  const std::size_t n = 16;
  const CrdmeModel m(sys, n);
  const double h = kTwoPi / n;
  const Eigen::MatrixXd K = m.kernel().dense();
  RandomStream rng(4, 0);
  VoxelState s(n);
  for (auto& c : s.counts)
    for (auto& v : c) v = static_cast<std::int64_t>(rng.uniform() * 4);
  for (std::size_t i = 0; i < n; ++i) {
    double rate = 0.0;
    for (Species sp : kAllSpecies) rate += 2.0 * static_cast<double>(s(sp, i)) * sys.D(sp) / (h * h);
    for (std::size_t j = 0; j < n; ++j) {
      rate += static_cast<double>(s(Species::A, i) * s(Species::B, j)) * sys.lambda * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / sys.gamma;
    }
    rate += static_cast<double>(s(Species::C, i)) * sys.mu * h * K.col(static_cast<Eigen::Index>(i)).sum();
    EXPECT_NEAR(total_voxel_rate(m, s, i), rate, 1e-7 * rate);
  }
}

TEST(CrdmeSimulator, UnbindOfTheOnlyC) {
  const CrdmeModel m(ReactionSystem{}, 8);
  VoxelState s(8);
  s(Species::C, 2) = 1;
  CrdmeSimulator sim(m, s);
  RandomStream rng(5, 0);
  sim.apply_event({2, {ChannelKind::Unbind, Species::C, 0.05}}, rng);
  EXPECT_EQ(sim.state().total(Species::C), 0);
  EXPECT_EQ(sim.state().total(Species::A), 1);
  EXPECT_EQ(sim.state().total(Species::B), 1);
}

TEST(CrdmeSimulator, InconsistentEventThrows) {
  const CrdmeModel m(ReactionSystem{}, 8);
  CrdmeSimulator sim(m, VoxelState(8));
  RandomStream rng(6, 0);
  EXPECT_THROW(sim.apply_event({1, {ChannelKind::Bind, Species::A, 1.0}}, rng), ConsistencyError);
}

TEST(CrdmeSimulator, BindConservesStoichiometricSums) {
  ReactionSystem sys;
  sys.gamma = 1.0;
  const CrdmeModel m(sys, 8);
  VoxelState s(8);
  s(Species::A, 3) = 2;
  s(Species::B, 3) = 1;
  CrdmeSimulator sim(m, s);
  RandomStream rng(7, 0);
  sim.apply_event({3, {ChannelKind::Bind, Species::A, 1.0}}, rng);
  EXPECT_EQ(sim.state().total(Species::A), 1);
  EXPECT_EQ(sim.state().total(Species::B), 0);
  EXPECT_EQ(sim.state().total(Species::C), 1);
}

TEST(CrdmeSimulator, SelectEventSignalsExhaustion) {
  const CrdmeModel m(ReactionSystem{}, 8);
  CrdmeSimulator sim(m, VoxelState(8));
  EXPECT_FALSE(sim.select_event(0.5, 0.5).has_value());
  RandomStream rng(1, 1);
  EXPECT_FALSE(sim.draw_waiting_time(rng).has_value());
}

TEST(CrdmeSimulator, IncrementalTreeMatchesRebuild) {
  ReactionSystem sys;
  sys.gamma = 20.0;
  sys.epsilon = 0.05;
  const CrdmeModel m(sys, 128);
  RandomStream init_rng(8, 0);
  VoxelState s(128);
  for (auto& c : s.counts)
    for (auto& v : c) v = static_cast<std::int64_t>(init_rng.uniform() * 3);
  CrdmeSimulator sim(m, s);
  RandomStream rng(8, 1);
  for (int k = 0; k < 10000; ++k) ASSERT_TRUE(sim.step(rng).has_value());
  std::vector<std::vector<double>> inc;
  for (std::size_t l = 0; l < sim.tree().levels(); ++l) {
    const auto lv = sim.tree().level(l);
    inc.emplace_back(lv.begin(), lv.end());
  }
  sim.rebuild();
  for (std::size_t l = 0; l < sim.tree().levels(); ++l) {
    for (std::size_t j = 0; j < inc[l].size(); ++j) {
      const double ref = sim.tree().level(l)[j];
      EXPECT_NEAR(inc[l][j], ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(Simulate, ConservesStoichiometricSums) {
  ReactionSystem sys;
  sys.gamma = 200.0;
  const CrdmeModel m(sys, 64);
  RandomStream rng(9, 0);
  const auto init = init_particles(m, initial_concentrations(PeriodicGrid{64}), rng);
  const std::int64_t ac = init.total(Species::A) + init.total(Species::C);
  const std::int64_t bc = init.total(Species::B) + init.total(Species::C);
  const std::vector<double> save{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto traj = simulate(m, init, 1.0, save, rng);
  ASSERT_EQ(traj.snapshots.size(), save.size());
  for (const auto& snap : traj.snapshots) {
    EXPECT_EQ(snap.totals[0] + snap.totals[2], ac);
    EXPECT_EQ(snap.totals[1] + snap.totals[2], bc);
    EXPECT_NEAR(snap.molar_mass[2], static_cast<double>(snap.totals[2]) / sys.gamma, 1e-15);
  }
  EXPECT_GT(traj.snapshots.back().totals[2], 0);
}

TEST(Simulate, IdenticalSeedsGiveIdenticalTrajectories) {
  ReactionSystem sys;
  sys.gamma = 100.0;
  const CrdmeModel m(sys, 64);
  const std::vector<double> save{0.1, 0.2, 0.3};
  SimulateOptions opt;
  opt.record_concentration = true;
  auto run = [&] {
    RandomStream rng(10, 3);
    return simulate(m, init_particles(m, initial_concentrations(PeriodicGrid{64}), rng), 0.3, save, rng, opt);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.events, b.events);
  for (std::size_t k = 0; k < save.size(); ++k) {
    EXPECT_EQ(a.snapshots[k].totals, b.snapshots[k].totals);
    EXPECT_EQ(a.snapshots[k].concentration, b.snapshots[k].concentration);
  }
}

TEST(Simulate, SingleWalkerFollowsDiscreteHeatKernel) {
  ReactionSystem sys;
  sys.lambda = 0.0;
  sys.mu = 0.0;
  const std::size_t n = 32;
  const CrdmeModel m(sys, n);
  const double h = kTwoPi / n;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    L(r, static_cast<Eigen::Index>((i + 1) % n)) += 1.0 / (h * h);
    L(r, static_cast<Eigen::Index>((i + n - 1) % n)) += 1.0 / (h * h);
    L(r, r) -= 2.0 / (h * h);
  }
  const double t = 1.0;
  const Eigen::VectorXd p = (L.transpose() * t).exp().col(0);

  const std::size_t trials = 10000;
  std::vector<double> freq(n, 0.0);
  const std::vector<double> save{t};
  SimulateOptions opt;
  opt.record_concentration = true;
  for (std::size_t k = 0; k < trials; ++k) {
    VoxelState s(n);
    s(Species::A, 0) = 1;
    RandomStream rng(12, k);
    const auto traj = simulate(m, s, t, save, rng, opt);
    ASSERT_EQ(traj.snapshots[0].totals[0], 1);
    const auto& conc = traj.snapshots[0].concentration[0];
    for (std::size_t i = 0; i < n; ++i)
      if (conc[i] > 0.0) freq[i] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = p[static_cast<Eigen::Index>(i)];
    EXPECT_NEAR(freq[i] / trials, pi, 4 * std::sqrt(pi * (1 - pi) / trials) + 1e-4) << "voxel " << i;
  }
}

TEST(Simulate, TwoVoxelBindUnbindChain) {
  ReactionSystem sys = small_system();
  sys.diffusivity = {0.0, 0.0, 0.0};
  expect_matches_master_equation(sys, {1, 0, 1, 0, 0, 0}, 100000);
}

TEST(Simulate, TwoVoxelReactionDiffusion) {
  ReactionSystem sys = small_system();
  sys.diffusivity = {1.0, 0.5, 0.1};
  expect_matches_master_equation(sys, {1, 0, 0, 1, 1, 0}, 100000);
}

}  // namespace
}  // namespace rdfluct
