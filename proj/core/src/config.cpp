#include "rdfluct/config.hpp"
#include "rdfluct/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace rdfluct {
namespace {

namespace pt = boost::property_tree;

template <class T>
T get_or(const pt::ptree& tree, const std::string& key, T fallback) {
  auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  std::istringstream in(*node);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError("cannot parse value '" + *node + "' for key " + key);
  }
  return value;
}

bool get_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  if (*node == "true" || *node == "1" || *node == "yes") return true;
  if (*node == "false" || *node == "0" || *node == "no") return false;
  throw ConfigError("cannot parse boolean '" + *node + "' for key " + key);
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> values;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    std::istringstream one(item);
    double v = 0.0;
    one >> v;
    if (one.fail() || !(one >> std::ws).eof()) throw ConfigError("cannot parse list entry '" + item + "' for key " + key);
    values.push_back(v);
  }
  return values;
}

void reject_unknown(const pt::ptree& tree) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> known{
      {"species", {"D_A", "D_B", "D_C"}},
      {"reaction", {"lambda", "mu", "epsilon", "gamma"}},
      {"domain", {"length"}},
      {"numerics", {"voxels", "modes", "basis_modes", "dt", "t_end", "save_interval", "covariance_reuse"}},
      {"ensemble", {"crdme_trials", "spide_trials", "master_seed", "workers", "gammas"}},
      {"output", {"directory", "snapshots", "report_script"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = std::find_if(known.begin(), known.end(), [&](const auto& k) { return k.first == section; });
    if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
}

}  // namespace

std::vector<double> NumericsConfig::save_times() const {
  std::vector<double> times;
  if (!(save_interval > 0.0)) return times;
  const auto count = static_cast<std::size_t>(std::floor(t_end / save_interval + 1e-9));
  times.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) times.push_back(static_cast<double>(k) * save_interval);
  return times;
}

void RunConfig::validate() const {
  try {
    system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(numerics.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(numerics.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(numerics.save_interval > 0.0)) throw ConfigError("save_interval must be positive");
  const double ratio = numerics.save_interval / numerics.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) throw ConfigError("dt must divide save_interval");
  if (numerics.voxels < 2) throw ConfigError("voxels must be >= 2");
  if (numerics.modes < 4 || numerics.modes % 2 != 0) throw ConfigError("modes must be even and >= 4");
  if (2 * numerics.basis_modes >= numerics.modes) throw ConfigError("basis_modes must be below the Nyquist mode");
  if (numerics.covariance_reuse < 1) throw ConfigError("covariance_reuse must be >= 1");
  if (ensemble.crdme_trials < 1 || ensemble.spide_trials < 1) throw ConfigError("trial counts must be >= 1");
  if (ensemble.workers < 1) throw ConfigError("workers must be >= 1");
  if (ensemble.gammas.empty()) throw ConfigError("gammas must not be empty");
  for (double g : ensemble.gammas) {
    if (!(g >= 1.0)) throw ConfigError("every gamma must be >= 1");
  }
}

RunConfig parse_config(std::string_view ini_text) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  reject_unknown(tree);

  RunConfig c;
  c.system.diffusivity[0] = get_or(tree, "species.D_A", c.system.diffusivity[0]);
  c.system.diffusivity[1] = get_or(tree, "species.D_B", c.system.diffusivity[1]);
  c.system.diffusivity[2] = get_or(tree, "species.D_C", c.system.diffusivity[2]);
  c.system.lambda = get_or(tree, "reaction.lambda", c.system.lambda);
  c.system.mu = get_or(tree, "reaction.mu", c.system.mu);
  c.system.epsilon = get_or(tree, "reaction.epsilon", c.system.epsilon);
  c.system.gamma = get_or(tree, "reaction.gamma", c.system.gamma);
  const double length = get_or(tree, "domain.length", kTwoPi);
  if (std::abs(length - kTwoPi) > 1e-12) throw ConfigError("domain.length must be 2 pi");

  c.numerics.voxels = get_or(tree, "numerics.voxels", c.numerics.voxels);
  c.numerics.modes = get_or(tree, "numerics.modes", c.numerics.modes);
  c.numerics.basis_modes = get_or(tree, "numerics.basis_modes", c.numerics.basis_modes);
  c.numerics.dt = get_or(tree, "numerics.dt", c.numerics.dt);
  c.numerics.t_end = get_or(tree, "numerics.t_end", c.numerics.t_end);
  c.numerics.save_interval = get_or(tree, "numerics.save_interval", c.numerics.save_interval);
  c.numerics.covariance_reuse = get_or(tree, "numerics.covariance_reuse", c.numerics.covariance_reuse);

  c.ensemble.crdme_trials = get_or(tree, "ensemble.crdme_trials", c.ensemble.crdme_trials);
  c.ensemble.spide_trials = get_or(tree, "ensemble.spide_trials", c.ensemble.spide_trials);
  c.ensemble.master_seed = get_or(tree, "ensemble.master_seed", c.ensemble.master_seed);
  c.ensemble.workers = get_or(tree, "ensemble.workers", c.ensemble.workers);
  if (auto g = tree.get_optional<std::string>("ensemble.gammas")) c.ensemble.gammas = parse_list(*g, "ensemble.gammas");

  c.output.directory = tree.get<std::string>("output.directory", c.output.directory);
  c.output.snapshots = get_bool(tree, "output.snapshots", c.output.snapshots);
  c.output.report_script = tree.get<std::string>("output.report_script", c.output.report_script);

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream out;
  out << "[species]\n"
      << "D_A = " << format_double(c.system.diffusivity[0]) << "\n"
      << "D_B = " << format_double(c.system.diffusivity[1]) << "\n"
      << "D_C = " << format_double(c.system.diffusivity[2]) << "\n\n"
      << "[reaction]\n"
      << "lambda = " << format_double(c.system.lambda) << "\n"
      << "mu = " << format_double(c.system.mu) << "\n"
      << "epsilon = " << format_double(c.system.epsilon) << "\n"
      << "gamma = " << format_double(c.system.gamma) << "\n\n"
      << "[domain]\n"
      << "length = " << format_double(c.system.domain_length) << "\n\n"
      << "[numerics]\n"
      << "voxels = " << c.numerics.voxels << "\n"
      << "modes = " << c.numerics.modes << "\n"
      << "basis_modes = " << c.numerics.basis_modes << "\n"
      << "dt = " << format_double(c.numerics.dt) << "\n"
      << "t_end = " << format_double(c.numerics.t_end) << "\n"
      << "save_interval = " << format_double(c.numerics.save_interval) << "\n"
      << "covariance_reuse = " << c.numerics.covariance_reuse << "\n\n"
      << "[ensemble]\n"
      << "crdme_trials = " << c.ensemble.crdme_trials << "\n"
      << "spide_trials = " << c.ensemble.spide_trials << "\n"
      << "master_seed = " << c.ensemble.master_seed << "\n"
      << "workers = " << c.ensemble.workers << "\n"
      << "gammas = ";
  for (std::size_t i = 0; i < c.ensemble.gammas.size(); ++i) {
    if (i) out << ",";
    out << format_double(c.ensemble.gammas[i]);
  }
  out << "\n\n"
      << "[output]\n"
      << "directory = " << c.output.directory << "\n"
      << "snapshots = " << (c.output.snapshots ? "true" : "false") << "\n"
      << "report_script = " << c.output.report_script << "\n";
  return out.str();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_ini(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rdfluct
