#include "pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sys/wait.h>

#include <json.hpp>

#include "rdfluct/csv.hpp"
#include "rdfluct/ensemble.hpp"
#include "rdfluct/fluctuation.hpp"
#include "rdfluct/meanfield.hpp"
#include "rdfluct/stats.hpp"

#ifndef RDFLUCT_BUILD_ID
#define RDFLUCT_BUILD_ID "unknown"
#endif

namespace rdfluct::tools {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void log(const StageContext& ctx, const std::string& msg) {
  if (!ctx.quiet) std::cerr << "[rdfluct] " << msg << "\n";
}

fs::path make_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

CsvTable read_artifact(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact("required input " + p.string() + " does not exist; run the producing stage first");
  return read_csv(p);
}

}  // namespace

std::string build_id() { return RDFLUCT_BUILD_ID; }

std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snap_%.3f.csv", t);
  return buf;
}

std::string gamma_dir(double gamma) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "gamma_%g", gamma);
  return buf;
}

void write_manifest(const StageContext& ctx, const std::string& stage, const fs::path& dir, double wall_seconds) {
  nlohmann::json j;
  j["stage"] = stage;
  j["config_hash"] = config_hash(ctx.config);
  j["master_seed"] = ctx.config.ensemble.master_seed;
  j["workers"] = ctx.config.ensemble.workers;
  j["build"] = ctx.build_id;
  j["wall_seconds"] = wall_seconds;
  j["config"] = to_ini(ctx.config);
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

void run_meanfield(const StageContext& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.config;
  const fs::path dir = make_dir(ctx.out / "meanfield");
  const MeanFieldSolver solver(cfg.system, cfg.numerics.modes);
  if (solver.kernel().under_resolved()) log(ctx, "warning: kernel width is below 4 grid spacings on the mean-field grid");
  const auto times = cfg.numerics.save_times();
  const auto states = solver.solve(solver.initial_state(), cfg.numerics.t_end, cfg.numerics.dt, times);

  CsvWriter masses(dir / "masses.csv", {"time", "mass_A", "mass_B", "mass_C"});
  for (const auto& st : states) {
    masses.row({format_double(st.time), format_double(st.mass(Species::A)), format_double(st.mass(Species::B)),
                format_double(st.mass(Species::C))});
    CsvWriter snap(dir / snapshot_name(st.time), {"x", "A", "B", "C"});
    for (std::size_t i = 0; i < solver.size(); ++i) {
      snap.row({format_double(solver.grid().point(i)), format_double(st[Species::A].grid_values()[i]),
                format_double(st[Species::B].grid_values()[i]), format_double(st[Species::C].grid_values()[i])});
    }
    snap.close();
  }
  masses.close();
  write_manifest(ctx, "solve-meanfield", dir, seconds_since(t0));
  log(ctx, "mean field written to " + dir.string());
}

void run_crdme(const StageContext& ctx) {
  const auto& cfg = ctx.config;
  const auto times = cfg.numerics.save_times();
  const fs::path root = make_dir(ctx.out / "crdme");
  for (double gamma : cfg.ensemble.gammas) {
    const auto t0 = Clock::now();
    ReactionSystem sys = cfg.system;
    sys.gamma = gamma;
    const CrdmeModel model(sys, cfg.numerics.voxels);
    if (model.kernel().under_resolved()) log(ctx, "warning: kernel width is below 4 voxel spacings");
    const fs::path dir = make_dir(root / gamma_dir(gamma));

    CrdmeEnsembleOptions opt;
    opt.workers = cfg.ensemble.workers;
    if (cfg.output.snapshots) {
      opt.simulate.record_concentration = true;
      opt.on_trial = [&](std::size_t trial, const CrdmeTrajectory& traj) {
        const fs::path run = make_dir(dir / ("run_" + std::to_string(trial)));
        for (const auto& snap : traj.snapshots) {
          CsvWriter w(run / snapshot_name(snap.time), {"voxel", "A", "B", "C"});
          for (std::size_t i = 0; i < model.size(); ++i) {
            w.row({std::to_string(i), format_double(snap.concentration[0][i]), format_double(snap.concentration[1][i]),
                   format_double(snap.concentration[2][i])});
          }
          w.close();
        }
      };
    }
    const auto ens = run_crdme_ensemble(model, initial_concentrations(PeriodicGrid{cfg.numerics.voxels}),
                                        cfg.numerics.t_end, times, cfg.ensemble.crdme_trials,
                                        crdme_seed(cfg.ensemble.master_seed, gamma), opt);
    if (ens.conservation_violations() != 0) throw std::logic_error("CRDME trajectory violated conservation");

    CsvWriter w(dir / "masses.csv", {"trial_id", "time", "species", "molar_mass"});
    for (std::size_t i = 0; i < ens.trials; ++i) {
      for (std::size_t k = 0; k < times.size(); ++k) {
        for (Species s : kAllSpecies) {
          w.row({std::to_string(i), format_double(times[k]), std::string(name(s)), format_double(ens.mass(i, k, s))});
        }
      }
    }
    w.close();
    write_manifest(ctx, "simulate-crdme", dir, seconds_since(t0));
    char msg[160];
    std::snprintf(msg, sizeof msg, "gamma %g: %zu trials, %.3g events, %.3f s per trial", gamma, ens.trials,
                  static_cast<double>(ens.events), ens.wall_seconds / static_cast<double>(ens.trials));
    log(ctx, msg);
  }
}

namespace {

MeanFieldState read_initial_state(const MeanFieldSolver& solver, const fs::path& dir) {
  const auto table = read_artifact(dir / snapshot_name(0.0));
  GridTriple fields{table.numeric_column("A"), table.numeric_column("B"), table.numeric_column("C")};
  if (fields[0].size() != solver.size()) {
    throw MissingArtifact("mean-field snapshot has " + std::to_string(fields[0].size()) + " points but modes = " +
                          std::to_string(solver.size()) + "; rerun solve-meanfield with this config");
  }
  return solver.make_state(std::move(fields), 0.0);
}

}  // namespace

void run_fluctuation(const StageContext& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.config;
  const MeanFieldSolver solver(cfg.system, cfg.numerics.modes);
  const auto init = read_initial_state(solver, ctx.out / "meanfield");
  const fs::path dir = make_dir(ctx.out / "fluctuation");
  const auto path = mean_field_path(solver, init, cfg.numerics.t_end, cfg.numerics.dt);
  const FluctuationModel model(solver, cfg.numerics.basis_modes);
  FluctuationEnsembleOptions opt;
  opt.workers = cfg.ensemble.workers;
  opt.covariance_reuse = cfg.numerics.covariance_reuse;
  const auto times = cfg.numerics.save_times();
  const auto ens = solve_fluctuation_ensemble(model, path, cfg.numerics.dt, times, cfg.ensemble.spide_trials,
                                              spide_seed(cfg.ensemble.master_seed), opt);

  CsvWriter w(dir / "samples.csv", {"trial_id", "time", "mass_Abar", "mass_Bbar", "mass_Cbar"});
  for (std::size_t i = 0; i < ens.trials; ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      w.row({std::to_string(i), format_double(times[k]), format_double(ens.bar(i, k, Species::A)),
             format_double(ens.bar(i, k, Species::B)), format_double(ens.bar(i, k, Species::C))});
    }
  }
  w.close();
  for (double gamma : cfg.ensemble.gammas) {
    char fname[64];
    std::snprintf(fname, sizeof fname, "composed_%s.csv", gamma_dir(gamma).c_str());
    CsvWriter c(dir / fname, {"trial_id", "time", "mass_Agamma", "mass_Bgamma", "mass_Cgamma"});
    for (std::size_t i = 0; i < ens.trials; ++i) {
      for (std::size_t k = 0; k < times.size(); ++k) {
        c.row({std::to_string(i), format_double(times[k]), format_double(ens.composed(i, k, Species::A, gamma)),
               format_double(ens.composed(i, k, Species::B, gamma)),
               format_double(ens.composed(i, k, Species::C, gamma))});
      }
    }
    c.close();
  }
  write_manifest(ctx, "solve-fluctuation", dir, seconds_since(t0));
  char msg[128];
  std::snprintf(msg, sizeof msg, "%zu SPIDE trials, %.4f s per trial", ens.trials,
                ens.wall_seconds / static_cast<double>(ens.trials));
  log(ctx, msg);
}

namespace {

// Samples of one column grouped by save-time index.
struct TimeSeriesSamples {
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};

std::size_t time_slot(std::vector<double>& times, std::map<double, std::size_t>& index, double t) {
  auto [it, inserted] = index.emplace(t, times.size());
  if (inserted) times.push_back(t);
  return it->second;
}

TimeSeriesSamples spide_samples(const CsvTable& table) {
  TimeSeriesSamples out;
  std::map<double, std::size_t> index;
  const auto t = table.numeric_column("time");
  const auto c = table.numeric_column("mass_Cbar");
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto k = time_slot(out.times, index, t[r]);
    if (out.values.size() <= k) out.values.resize(k + 1);
    out.values[k].push_back(c[r]);
  }
  return out;
}

TimeSeriesSamples crdme_samples(const CsvTable& table) {
  TimeSeriesSamples out;
  std::map<double, std::size_t> index;
  const auto t = table.numeric_column("time");
  const auto m = table.numeric_column("molar_mass");
  const auto s = table.column("species");
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (table.rows[r][s] != "C") continue;
    const auto k = time_slot(out.times, index, t[r]);
    if (out.values.size() <= k) out.values.resize(k + 1);
    out.values[k].push_back(m[r]);
  }
  return out;
}

}  // namespace

void run_compare(const StageContext& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.config;
  const auto spide = spide_samples(read_artifact(ctx.out / "fluctuation" / "samples.csv"));
  if (spide.times.empty()) throw MissingArtifact("fluctuation samples are empty");
  const auto mf = read_artifact(ctx.out / "meanfield" / "masses.csv");
  const auto mf_times = mf.numeric_column("time");
  const auto mf_c = mf.numeric_column("mass_C");

  std::vector<StreamingMoments> spide_m;
  for (const auto& v : spide.values) spide_m.push_back(StreamingMoments::of(v));

  CsvWriter cmp(ctx.out / "comparison.csv", {"time", "V_SPIDE", "se_SPIDE", "gamma", "V_CRDME_scaled", "se_CRDME", "gap"});
  CsvWriter hist(ctx.out / "histogram.csv", {"bin_left", "density", "model", "gamma"});
  std::vector<double> gammas, gaps;
  const std::size_t last = spide.times.size() - 1;
  for (double gamma : cfg.ensemble.gammas) {
    const fs::path masses = ctx.out / "crdme" / gamma_dir(gamma) / "masses.csv";
    if (!fs::exists(masses)) {
      log(ctx, "no CRDME data for gamma " + format_double(gamma) + ", skipped");
      continue;
    }
    const auto crdme = crdme_samples(read_csv(masses));
    if (crdme.times != spide.times) throw MissingArtifact("CRDME and SPIDE save times differ for " + masses.string());
    std::vector<StreamingMoments> crdme_m;
    for (const auto& v : crdme.values) crdme_m.push_back(StreamingMoments::of(v));
    const auto comparison = compare_variances(spide.times, spide_m, crdme_m, gamma);
    for (const auto& row : comparison.rows) {
      cmp.row({format_double(row.time), format_double(row.spide.variance), format_double(row.spide.standard_error),
               format_double(gamma), format_double(row.crdme.variance), format_double(row.crdme.standard_error),
               format_double(row.gap())});
    }
    gammas.push_back(gamma);
    gaps.push_back(comparison.rows.back().gap());

    const auto ch = molar_mass_histogram(crdme.values[last], gamma);
    for (std::size_t i = 0; i < ch.density.size(); ++i)
      hist.row({format_double(ch.bin_left(i)), format_double(ch.density[i]), "crdme", format_double(gamma)});
    double m_c = 0.0;
    for (std::size_t r = 0; r < mf_times.size(); ++r)
      if (std::abs(mf_times[r] - spide.times[last]) < 1e-9) m_c = mf_c[r];
    std::vector<double> composed(spide.values[last]);
    for (double& x : composed) x = m_c + x / std::sqrt(gamma);
    const auto sh = molar_mass_histogram(composed, gamma);
    for (std::size_t i = 0; i < sh.density.size(); ++i)
      hist.row({format_double(sh.bin_left(i)), format_double(sh.density[i]), "spide", format_double(gamma)});
  }
  cmp.close();
  hist.close();
  if (gammas.empty()) throw MissingArtifact("no CRDME results found under " + (ctx.out / "crdme").string());

  std::string exponent = "nan";
  bool positive = true;
  for (double g : gaps) positive = positive && g > 0.0;
  if (gammas.size() >= 3 && positive) exponent = format_double(fit_convergence_rate(gammas, gaps));
  CsvWriter rates(ctx.out / "rates.csv", {"gamma", "gap_at_t1", "fitted_exponent"});
  for (std::size_t i = 0; i < gammas.size(); ++i) rates.row({format_double(gammas[i]), format_double(gaps[i]), exponent});
  rates.close();
  write_manifest(ctx, "compare", ctx.out, seconds_since(t0));
  log(ctx, "comparison written for " + std::to_string(gammas.size()) + " gamma values, fitted exponent " + exponent);
}

int run_report(const StageContext& ctx, const std::string& python) {
  for (const char* f : {"comparison.csv", "histogram.csv", "rates.csv"}) {
    if (!fs::exists(ctx.out / f)) throw MissingArtifact((ctx.out / f).string() + " missing; run compare first");
  }
  const fs::path script = ctx.config.output.report_script;
  if (!fs::exists(script)) throw MissingArtifact("figure script " + script.string() + " not found");
  const fs::path dir = make_dir(ctx.out / "figures");
  const auto abs = [](const fs::path& p) { return fs::absolute(p).string(); };

  nlohmann::json spec;
  spec["inputs"] = {{"comparison", abs(ctx.out / "comparison.csv")},
                    {"histogram", abs(ctx.out / "histogram.csv")},
                    {"rates", abs(ctx.out / "rates.csv")}};
  spec["gammas"] = ctx.config.ensemble.gammas;
  spec["figures"] = nlohmann::json::array();
  for (const char* kind : {"variance_overlay", "gap_time", "gap_gamma", "histogram"}) {
    spec["figures"].push_back({{"kind", kind}, {"output", abs(dir / (std::string(kind) + ".png"))}});
  }
  const fs::path spec_path = dir / "spec.json";
  std::ofstream(spec_path) << spec.dump(2) << "\n";

  const std::string cmd = python + " \"" + script.string() + "\" --spec \"" + spec_path.string() + "\"";
  log(ctx, "running " + cmd);
  const int status = std::system(cmd.c_str());
  if (status == -1) return kUsage;
  return WIFEXITED(status) ? WEXITSTATUS(status) : kUsage;
}

}  // namespace rdfluct::tools
