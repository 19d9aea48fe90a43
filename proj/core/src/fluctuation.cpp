#include "rdfluct/fluctuation.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <string>
#include <thread>

namespace rdfluct {
namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Eigen::VectorXd convolved(const KernelConvolution& conv, std::span<const double> v) {
  const auto out = conv.apply(v);
  return as_vector(out);
}

}  // namespace

FluctuationBasis::FluctuationBasis(std::size_t n_modes, PeriodicGrid grid)
    : n_modes_(n_modes), size_(2 * n_modes + 1), grid_(grid) {
  if (grid.n < 2 * n_modes + 2) throw std::invalid_argument("grid too coarse for the fluctuation basis");
  const auto rows = static_cast<Eigen::Index>(grid.n);
  const auto cols = static_cast<Eigen::Index>(size_);
  values_.resize(rows, cols);
  derivatives_.resize(rows, cols);
  gram_.resize(cols);
  gram_[0] = kTwoPi;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = grid.point(static_cast<std::size_t>(i));
    values_(i, 0) = 1.0;
    derivatives_(i, 0) = 0.0;
    for (std::size_t n = 1; n <= n_modes; ++n) {
      const double k = static_cast<double>(n);
      const auto c = static_cast<Eigen::Index>(2 * n - 1);
      values_(i, c) = std::cos(k * x);
      values_(i, c + 1) = std::sin(k * x);
      derivatives_(i, c) = -k * std::sin(k * x);
      derivatives_(i, c + 1) = k * std::cos(k * x);
    }
  }
  for (Eigen::Index p = 1; p < cols; ++p) gram_[p] = kTwoPi / 2.0;
}

NoiseCovariance NoiseCovariance::factorize(Eigen::MatrixXd sigma) {
  NoiseCovariance cov;
  const auto dim = sigma.rows();
  const double trace = sigma.trace();
  if (trace == 0.0 && sigma.isZero(0.0)) {
    cov.factor = Eigen::MatrixXd::Zero(dim, dim);
    cov.sigma = std::move(sigma);
    return cov;
  }
  if (!(trace > 0.0)) throw FactorizationError("noise covariance has non-positive trace");
  double jitter = 1e-12 * trace / static_cast<double>(dim);
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd shifted = sigma;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      cov.factor = llt.matrixL();
      cov.jitter = jitter;
      cov.escalations = attempt;
      cov.sigma = std::move(sigma);
      return cov;
    }
    jitter *= 100.0;
  }
  throw FactorizationError("noise covariance is not positive semidefinite (jitter " + std::to_string(jitter / 100.0) +
                           ")");
}

Eigen::VectorXd sample_noise_increment(const NoiseCovariance& cov, double dt, RandomStream& rng) {
  Eigen::VectorXd z(cov.factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd w = cov.factor.triangularView<Eigen::Lower>() * z;
  return std::sqrt(dt) * w;
}

FluctuationModel::FluctuationModel(const MeanFieldSolver& solver, std::size_t n_modes)
    : solver_(&solver), basis_(n_modes, solver.grid()) {
  const double h = solver.grid().spacing();
  smoothing_ = h * solver.kernel().dense();
  smoothed_basis_ = smoothing_ * basis_.values();
  projector_ = basis_.gram().cwiseInverse().asDiagonal() * (h * basis_.values().transpose());
  const auto P = static_cast<Eigen::Index>(basis_.size());
  gram_inverse_packed_.resize(3 * P);
  for (Eigen::Index s = 0; s < 3; ++s) gram_inverse_packed_.segment(s * P, P) = basis_.gram().cwiseInverse();
}

Eigen::VectorXd FluctuationModel::drift(const FluctuationState& state, const MeanFieldState& mf) const {
  const auto& conv = solver_->convolution();
  const auto& F = basis_.values();
  const Eigen::VectorXd a_bar = F * state.species(Species::A);
  const Eigen::VectorXd b_bar = F * state.species(Species::B);
  const Eigen::VectorXd c_bar = F * state.species(Species::C);
  const Eigen::VectorXd Ka_bar = convolved(conv, {a_bar.data(), static_cast<std::size_t>(a_bar.size())});
  const Eigen::VectorXd Kb_bar = convolved(conv, {b_bar.data(), static_cast<std::size_t>(b_bar.size())});
  const Eigen::VectorXd Kc_bar = convolved(conv, {c_bar.data(), static_cast<std::size_t>(c_bar.size())});
  const auto A = as_vector(mf[Species::A].grid_values());
  const auto B = as_vector(mf[Species::B].grid_values());
  const Eigen::VectorXd KA = convolved(conv, mf[Species::A].grid_values());
  const Eigen::VectorXd KB = convolved(conv, mf[Species::B].grid_values());
  const double lambda = solver_->system().lambda;
  const double mu = solver_->system().mu;

  const Eigen::ArrayXd unbind = 0.5 * mu * (Kc_bar + c_bar).array();
  const Eigen::ArrayXd bind_a = KB.array() * a_bar.array() + Kb_bar.array() * A.array();
  const Eigen::ArrayXd bind_b = KA.array() * b_bar.array() + Ka_bar.array() * B.array();
  const Eigen::VectorXd rA = (-lambda * bind_a + unbind).matrix();
  const Eigen::VectorXd rB = (-lambda * bind_b + unbind).matrix();
  const Eigen::VectorXd rC = (-mu * c_bar.array() + 0.5 * lambda * (bind_a + bind_b)).matrix();

  const auto P = static_cast<Eigen::Index>(basis_.size());
  Eigen::VectorXd out(3 * P);
  out.segment(0, P) = projector_ * rA;
  out.segment(P, P) = projector_ * rB;
  out.segment(2 * P, P) = projector_ * rC;
  return out;
}

Eigen::MatrixXd FluctuationModel::drift_operator(const MeanFieldState& mf) const {
  const auto& conv = solver_->convolution();
  const auto& F = basis_.values();
  const auto& KF = smoothed_basis_;
  const auto A = as_vector(mf[Species::A].grid_values());
  const auto B = as_vector(mf[Species::B].grid_values());
  const Eigen::VectorXd KA = convolved(conv, mf[Species::A].grid_values());
  const Eigen::VectorXd KB = convolved(conv, mf[Species::B].grid_values());
  const double lambda = solver_->system().lambda;
  const double mu = solver_->system().mu;

  const Eigen::MatrixXd KB_F = KB.asDiagonal() * F;
  const Eigen::MatrixXd KA_F = KA.asDiagonal() * F;
  const Eigen::MatrixXd A_KF = A.asDiagonal() * KF;
  const Eigen::MatrixXd B_KF = B.asDiagonal() * KF;
  const Eigen::MatrixXd unbind = 0.5 * mu * (projector_ * (KF + F));

  const auto P = static_cast<Eigen::Index>(basis_.size());
  Eigen::MatrixXd J(3 * P, 3 * P);
  J.block(0, 0, P, P) = -lambda * (projector_ * KB_F);
  J.block(0, P, P, P) = -lambda * (projector_ * A_KF);
  J.block(0, 2 * P, P, P) = unbind;
  J.block(P, 0, P, P) = -lambda * (projector_ * B_KF);
  J.block(P, P, P, P) = -lambda * (projector_ * KA_F);
  J.block(P, 2 * P, P, P) = unbind;
  J.block(2 * P, 0, P, P) = 0.5 * lambda * (projector_ * (KB_F + B_KF));
  J.block(2 * P, P, P, P) = 0.5 * lambda * (projector_ * (KA_F + A_KF));
  J.block(2 * P, 2 * P, P, P) = -mu * (projector_ * F);
  return J;
}

Eigen::MatrixXd FluctuationModel::covariance_density(const MeanFieldState& mf) const {
  const auto& conv = solver_->convolution();
  const auto& sys = solver_->system();
  const auto& F = basis_.values();
  const auto& dF = basis_.derivatives();
  const auto& KF = smoothed_basis_;
  const double h = solver_->grid().spacing();
  const auto A = as_vector(mf[Species::A].grid_values()).array();
  const auto B = as_vector(mf[Species::B].grid_values()).array();
  const auto C = as_vector(mf[Species::C].grid_values()).array();
  const Eigen::ArrayXd KA = convolved(conv, mf[Species::A].grid_values()).array();
  const Eigen::ArrayXd KB = convolved(conv, mf[Species::B].grid_values()).array();
  const Eigen::ArrayXd KC = convolved(conv, mf[Species::C].grid_values()).array();
  const double lambda = sys.lambda;
  const double mu = sys.mu;

  // <w f_p, g_q> = h (F^T diag(w) F)_{pq}
  auto weighted = [&](const Eigen::ArrayXd& w, const Eigen::MatrixXd& G) -> Eigen::MatrixXd {
    return h * (G.transpose() * (w.matrix().asDiagonal() * G));
  };

  const Eigen::ArrayXd A_KB = A * KB;
  const Eigen::ArrayXd B_KA = B * KA;
  const Eigen::ArrayXd unbind_split = 0.5 * mu * (KC + C);

  const Eigen::MatrixXd XA = A.matrix().asDiagonal() * F;
  const Eigen::MatrixXd XB = B.matrix().asDiagonal() * F;
  const Eigen::MatrixXd XC = C.matrix().asDiagonal() * F;
  const Eigen::MatrixXd KXB = smoothing_ * XB;
  const Eigen::MatrixXd KXC = smoothing_ * XC;
  const Eigen::MatrixXd bind_cross = h * (XA.transpose() * KXB);  // <f A, K*(g B)>
  const Eigen::MatrixXd unbind_cross = h * (KXC.transpose() * F + F.transpose() * KXC);
  const Eigen::MatrixXd unbind_spread = h * (KF.transpose() * XC) + weighted(C, F);

  const Eigen::MatrixXd AA = weighted(2.0 * sys.D(Species::A) * A, dF) + weighted(lambda * A_KB + unbind_split, F);
  const Eigen::MatrixXd BB = weighted(2.0 * sys.D(Species::B) * B, dF) + weighted(lambda * B_KA + unbind_split, F);
  const Eigen::MatrixXd CC =
      weighted(2.0 * sys.D(Species::C) * C, dF) + weighted(mu * C + 0.5 * lambda * (A_KB + B_KA), F);
  const Eigen::MatrixXd AB = lambda * bind_cross + 0.5 * mu * unbind_cross;
  const Eigen::MatrixXd AC = -(0.5 * lambda * (weighted(A_KB, F) + bind_cross) + 0.5 * mu * unbind_spread);
  const Eigen::MatrixXd BC =
      -(0.5 * lambda * (weighted(B_KA, F) + bind_cross.transpose()) + 0.5 * mu * unbind_spread);

  const auto P = static_cast<Eigen::Index>(basis_.size());
  Eigen::MatrixXd sigma(3 * P, 3 * P);
  sigma.block(0, 0, P, P) = AA;
  sigma.block(P, P, P, P) = BB;
  sigma.block(2 * P, 2 * P, P, P) = CC;
  sigma.block(0, P, P, P) = AB;
  sigma.block(P, 0, P, P) = AB.transpose();
  sigma.block(0, 2 * P, P, P) = AC;
  sigma.block(2 * P, 0, P, P) = AC.transpose();
  sigma.block(P, 2 * P, P, P) = BC;
  sigma.block(2 * P, P, P, P) = BC.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::VectorXd FluctuationModel::diffusion_factors(double dt) const {
  const auto P = static_cast<Eigen::Index>(basis_.size());
  Eigen::VectorXd d(3 * P);
  for (Species s : kAllSpecies) {
    const double D = solver_->system().D(s);
    for (Eigen::Index p = 0; p < P; ++p) {
      const double n = basis_.wavenumber(static_cast<std::size_t>(p));
      d[static_cast<Eigen::Index>(index(s)) * P + p] = 1.0 / (1.0 + dt * D * n * n);
    }
  }
  return d;
}

Eigen::VectorXd FluctuationModel::to_coefficients(const Eigen::VectorXd& projected) const {
  return projected.cwiseProduct(gram_inverse_packed_);
}

FluctuationState FluctuationModel::step_with_increment(const FluctuationState& state, const MeanFieldState& mf,
                                                       double dt, const Eigen::VectorXd& projected_increment) const {
  FluctuationState next;
  next.time = state.time + dt;
  next.coefficients = state.coefficients + dt * drift(state, mf) + to_coefficients(projected_increment);
  next.coefficients = next.coefficients.cwiseProduct(diffusion_factors(dt));
  if (!next.coefficients.allFinite() || next.coefficients.cwiseAbs().maxCoeff() > 1e6) {
    throw NumericalInstability("fluctuation solution left the stable range at t = " + std::to_string(next.time));
  }
  return next;
}

FluctuationState FluctuationModel::step(const FluctuationState& state, const MeanFieldState& mf, double dt,
                                        RandomStream& rng) const {
  const auto cov = assemble_covariance(mf);
  return step_with_increment(state, mf, dt, sample_noise_increment(cov, dt, rng));
}

std::vector<MeanFieldState> mean_field_path(const MeanFieldSolver& solver, const MeanFieldState& init, double t_end,
                                            double dt) {
  const std::size_t steps = MeanFieldSolver::steps_to(t_end, dt);
  std::vector<MeanFieldState> path;
  path.reserve(steps + 1);
  path.push_back(init);
  for (std::size_t k = 0; k < steps; ++k) {
    auto next = solver.step(path.back(), dt);
    next.time = init.time + static_cast<double>(k + 1) * dt;
    check_stability(next);
    path.push_back(std::move(next));
  }
  return path;
}

std::vector<double> FluctuationEnsemble::bar_samples(std::size_t k, Species s) const {
  std::vector<double> out(trials);
  for (std::size_t i = 0; i < trials; ++i) out[i] = bar(i, k, s);
  return out;
}

FluctuationEnsemble solve_fluctuation_ensemble(const FluctuationModel& model, std::span<const MeanFieldState> mf_path,
                                               double dt, std::span<const double> save_times, std::size_t n_trials,
                                               std::uint64_t seed, const FluctuationEnsembleOptions& options) {
  if (mf_path.empty()) throw std::invalid_argument("empty mean-field path");
  if (options.covariance_reuse == 0 || options.block_size == 0) throw std::invalid_argument("invalid ensemble options");
  const std::size_t steps = mf_path.size() - 1;
  std::vector<std::size_t> save_steps;
  for (double t : save_times) {
    const std::size_t k = MeanFieldSolver::steps_to(t - mf_path.front().time, dt);
    if (k > steps) throw std::invalid_argument("save time beyond the mean-field path");
    save_steps.push_back(k);
  }
  if (!std::is_sorted(save_steps.begin(), save_steps.end())) throw std::invalid_argument("save times must be sorted");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t T = save_times.size();
  const auto P = static_cast<Eigen::Index>(model.basis().size());
  const auto dim = 3 * P;
  const auto n_cols = static_cast<Eigen::Index>(n_trials);

  FluctuationEnsemble out;
  out.times.assign(save_times.begin(), save_times.end());
  out.trials = n_trials;
  out.bar_mass.assign(n_trials * T, {0.0, 0.0, 0.0});
  out.mean_field_mass.resize(T);
  for (std::size_t j = 0; j < T; ++j) {
    for (Species s : kAllSpecies) out.mean_field_mass[j][index(s)] = mf_path[save_steps[j]].mass(s);
  }

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(dim, n_cols);
  std::vector<RandomStream> streams;
  streams.reserve(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) streams.emplace_back(seed, i);

  const Eigen::VectorXd damp = model.diffusion_factors(dt);
  Eigen::MatrixXd Aop;
  Eigen::MatrixXd Bop = Eigen::MatrixXd::Zero(dim, dim);

  const std::size_t n_blocks = (n_trials + options.block_size - 1) / options.block_size;
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n_blocks));
  std::atomic<bool> unstable{false};

  auto record = [&](std::size_t first, std::size_t count, std::size_t k) {
    for (std::size_t j = 0; j < T; ++j) {
      if (save_steps[j] != k) continue;
      for (std::size_t i = first; i < first + count; ++i) {
        for (Species s : kAllSpecies) {
          out.bar_mass[i * T + j][index(s)] = kTwoPi * X(static_cast<Eigen::Index>(index(s)) * P, static_cast<Eigen::Index>(i));
        }
      }
    }
  };

  auto advance_block = [&](std::size_t b, std::size_t k) {
    const std::size_t first = b * options.block_size;
    const std::size_t count = std::min(options.block_size, n_trials - first);
    const auto c0 = static_cast<Eigen::Index>(first);
    const auto nc = static_cast<Eigen::Index>(count);
    auto Xb = X.middleCols(c0, nc);
    Eigen::MatrixXd next = Aop * Xb;
    if (!options.zero_noise) {
      Eigen::MatrixXd Z(dim, nc);
      for (Eigen::Index c = 0; c < nc; ++c) {
        auto& rng = streams[first + static_cast<std::size_t>(c)];
        for (Eigen::Index r = 0; r < dim; ++r) Z(r, c) = rng.normal();
      }
      next.noalias() += Bop * Z;
    }
    Xb = damp.asDiagonal() * next;
    if (!Xb.allFinite() || Xb.cwiseAbs().maxCoeff() > 1e6) unstable = true;
    record(first, count, k + 1);
  };

  auto prepare = [&](std::size_t k) {
    if (k % options.covariance_reuse != 0) return;
    const auto& mf = mf_path[k];
    Aop = Eigen::MatrixXd::Identity(dim, dim) + dt * model.drift_operator(mf);
    if (!options.zero_noise) {
      const auto cov = model.assemble_covariance(mf);
      Eigen::VectorXd ginv(dim);
      ginv = model.to_coefficients(Eigen::VectorXd::Ones(dim));
      Bop = std::sqrt(dt) * (ginv.asDiagonal() * cov.factor);
    }
  };

  auto fail_unstable = [&](std::size_t k) {
    throw NumericalInstability("fluctuation ensemble left the stable range at t = " +
                               std::to_string(mf_path[k].time + dt));
  };

  record(0, n_trials, 0);
  if (workers == 1) {
    for (std::size_t k = 0; k < steps; ++k) {
      prepare(k);
      for (std::size_t b = 0; b < n_blocks; ++b) advance_block(b, k);
      if (unstable) fail_unstable(k);
    }
  } else {
    std::barrier sync(static_cast<std::ptrdiff_t>(workers + 1));
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> current{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (;;) {
          sync.arrive_and_wait();
          if (stop) return;
          const std::size_t k = current;
          for (std::size_t b = w; b < n_blocks; b += workers) advance_block(b, k);
          sync.arrive_and_wait();
        }
      });
    }
    auto shutdown = [&] {
      stop = true;
      sync.arrive_and_wait();
    };
    for (std::size_t k = 0; k < steps; ++k) {
      try {
        prepare(k);
      } catch (...) {
        shutdown();
        throw;
      }
      current = k;
      sync.arrive_and_wait();
      sync.arrive_and_wait();
      if (unstable) {
        shutdown();
        fail_unstable(k);
      }
    }
    shutdown();
  }

  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace rdfluct
