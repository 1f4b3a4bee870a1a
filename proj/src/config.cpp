#include "latmpc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace latmpc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ConfigError("missing config key: " + section + "." + key);
  return values_.at(section).at(key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? values_.at(section).at(key) : fallback;
}

double Config::number(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + section + "." + key + " is not a number: " + v);
  }
}

double Config::number_or(const std::string& section, const std::string& key,
                         double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  std::istringstream is(get(section, key));
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    if (tok == ";") continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key " + section + "." + key + " has a non-numeric entry: " + tok);
    }
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!has(section, key)) order_.emplace_back(section, key);
  values_[section][key] = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  if (!has(section, key))
    throw ConfigError("override references unknown key: " + section + "." + key);
  values_[section][key] = trim(assignment.substr(eq + 1));
}

std::string Config::to_text() const {
  std::ostringstream os;
  std::string current;
  for (const auto& [section, key] : order_) {
    if (section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << section << "]\n";
      current = section;
    }
    os << key << " = " << values_.at(section).at(key) << '\n';
  }
  return os.str();
}

namespace {

TireParams load_tire(const Config& cfg) {
  TireParams tire;
  tire.c_alpha = cfg.number("tire", "c_alpha");
  tire.c_sigma = cfg.number("tire", "c_sigma");
  tire.mu_x = cfg.number("tire", "mu_x");
  tire.mu_y = cfg.number("tire", "mu_y");
  const std::string model = cfg.get_or("tire", "model", "dugoff");
  if (model == "dugoff") {
    tire.kind = TireModelKind::Dugoff;
  } else if (model == "pacejka") {
    tire.kind = TireModelKind::Pacejka;
    // Shape factors are placeholders, not identified values.
    tire.pacejka = PacejkaCoeffs{cfg.number_or("tire", "pacejka_b", 10.0),
                                 cfg.number_or("tire", "pacejka_c", 1.9),
                                 cfg.number_or("tire", "pacejka_e", 0.97)};
  } else {
    throw ConfigError("tire.model must be dugoff or pacejka");
  }
  return tire;
}

}  // namespace

VehicleParams load_vehicle_params(const Config& cfg) {
  const std::string kind = cfg.get("vehicle", "kind");
  if (kind == "general_ev") {
    GeneralEvParams p;
    p.m_s = cfg.number("vehicle", "m_s");
    p.m_u = cfg.number("vehicle", "m_u");
    p.m = cfg.number_or("vehicle", "m", p.m_s + p.m_u);
    p.l_f = cfg.number("vehicle", "l_f");
    p.l_r = cfg.number("vehicle", "l_r");
    p.t_f = cfg.number("vehicle", "t_f");
    p.t_r = cfg.number("vehicle", "t_r");
    p.h_s = cfg.number("vehicle", "h_s");
    p.h_u = cfg.number("vehicle", "h_u");
    p.h_cg = cfg.number("vehicle", "h_cg");
    p.i_xx = cfg.number("vehicle", "i_xx");
    p.i_zz = cfg.number("vehicle", "i_zz");
    p.k_phi = cfg.number("vehicle", "k_phi");
    p.c_phi = cfg.number("vehicle", "c_phi");
    p.r_eff = cfg.number("vehicle", "r_eff");
    p.i_w = cfg.number("vehicle", "i_w");
    p.q_max = cfg.number("vehicle", "q_max");
    p.q_min = cfg.number("vehicle", "q_min");
    p.delta_max = cfg.number("vehicle", "delta_max");
    p.k_usd = cfg.number("vehicle", "k_usd");
    p.ri_c = cfg.number("vehicle", "ri_c");
    p.alpha_r_max = cfg.number("vehicle", "alpha_r_max");
    p.lambda_max = cfg.number("vehicle", "lambda_max");
    p.tire = load_tire(cfg);
    p.validate();
    return p;
  }
  if (kind == "vhs") {
    VhsParams p;
    p.m = cfg.number("vehicle", "m");
    p.m_s = cfg.number("vehicle", "m_s");
    p.m_f = cfg.number("vehicle", "m_f");
    p.l_f = cfg.number("vehicle", "l_f");
    p.l_r = cfg.number("vehicle", "l_r");
    p.i_xx = cfg.number("vehicle", "i_xx");
    p.i_zz = cfg.number("vehicle", "i_zz");
    p.h_s = cfg.number("vehicle", "h_s");
    p.k_s = cfg.number("vehicle", "k_s");
    p.b_s = cfg.number("vehicle", "b_s");
    p.l_s = cfg.number("vehicle", "l_s");
    p.t_f = cfg.number("vehicle", "t_f");
    p.t_r = cfg.number("vehicle", "t_r");
    p.r_eff = cfg.number("vehicle", "r_eff");
    p.delta_max = cfg.number("vehicle", "delta_max");
    p.q_max = cfg.number("vehicle", "q_max");
    p.q_min = cfg.number("vehicle", "q_min");
    p.k_usd = cfg.number("vehicle", "k_usd");
    p.alpha_r_max = cfg.number("vehicle", "alpha_r_max");
    p.tire = load_tire(cfg);
    p.validate();
    return p;
  }
  throw ConfigError("vehicle.kind must be general_ev or vhs");
}

Scenario load_scenario(const Config& cfg) {
  Scenario s;
  s.name = cfg.get_or("scenario", "name", "scenario");
  const std::string kind = cfg.get("scenario", "model");
  if (kind == "general_ev")
    s.kind = ModelKind::GeneralEv;
  else if (kind == "vhs")
    s.kind = ModelKind::Vhs;
  else
    throw ConfigError("scenario.model must be general_ev or vhs");
  s.u = cfg.number("scenario", "u");
  s.steps = static_cast<int>(cfg.number("scenario", "steps"));
  s.t_s = cfg.number("scenario", "t_s");
  const auto x0 = cfg.numbers("scenario", "x0");
  s.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<long>(x0.size()));
  s.delta_d = cfg.number_or("scenario", "delta_d", 0.0);
  if (cfg.has("scenario", "driver_torque")) {
    const auto q = cfg.numbers("scenario", "driver_torque");
    if (q.size() != 4) throw ConfigError("scenario.driver_torque needs 4 values");
    std::copy(q.begin(), q.end(), s.driver.torque.begin());
  }
  if (cfg.has("scenario", "driver_steering")) {
    const auto d = cfg.numbers("scenario", "driver_steering");
    if (d.size() != 4) throw ConfigError("scenario.driver_steering needs 4 values");
    std::copy(d.begin(), d.end(), s.driver.steering.begin());
  }
  if (cfg.has("scenario", "checkpoints")) {
    const auto flat = cfg.numbers("scenario", "checkpoints");
    if (flat.size() % 2 != 0) throw ConfigError("scenario.checkpoints needs x y pairs");
    for (size_t i = 0; i < flat.size(); i += 2)
      s.checkpoints.push_back({flat[i], flat[i + 1]});
  }
  s.phi_r = cfg.number_or("scenario", "phi_r", 0.0);
  s.prediction_error_gain = cfg.number_or("scenario", "prediction_error_gain", 1.0);
  s.seed = static_cast<std::uint64_t>(cfg.number_or("scenario", "seed", 0.0));
  s.substeps = static_cast<int>(cfg.number_or("scenario", "substeps", 0.0));
  s.validate();
  return s;
}

MpcConfig load_mpc_config(const Config& cfg, ModelKind kind) {
  MpcConfig mpc;
  mpc.kind = kind;
  mpc.horizon = static_cast<int>(cfg.number("mpc", "horizon"));
  mpc.t_s = cfg.number("mpc", "t_s");
  const auto q = cfg.numbers("mpc", "q");
  mpc.state_weights = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<long>(q.size()));
  const double r_torque = cfg.number("mpc", "r_torque");
  const double r_steer = cfg.number("mpc", "r_steer");
  mpc.input_weights.resize(8);
  for (int i = 0; i < 4; ++i) {
    mpc.input_weights(2 * i) = r_torque;
    mpc.input_weights(2 * i + 1) = r_steer;
  }
  mpc.slack_weight = cfg.number("mpc", "slack_weight");
  mpc.solver.rho = cfg.number_or("mpc", "solver_rho", mpc.solver.rho);
  mpc.solver.eps_abs = cfg.number_or("mpc", "solver_eps_abs", mpc.solver.eps_abs);
  mpc.solver.eps_rel = cfg.number_or("mpc", "solver_eps_rel", mpc.solver.eps_rel);
  mpc.solver.max_iter =
      static_cast<int>(cfg.number_or("mpc", "solver_max_iter", mpc.solver.max_iter));
  mpc.solver.polish = cfg.number_or("mpc", "solver_polish", 0.0) != 0.0;
  return mpc;
}

ActuatorConfig load_actuators(const Config& cfg, ModelKind kind) {
  ActuatorConfig a =
      kind == ModelKind::Vhs ? ActuatorConfig::vhs() : ActuatorConfig::torque_vectoring();
  if (cfg.has("mpc", "t_q")) {
    const auto v = cfg.numbers("mpc", "t_q");
    if (v.size() != 4) throw ConfigError("mpc.t_q needs 4 flags");
    for (int i = 0; i < 4; ++i) a.torque[i] = v[i] != 0.0;
  }
  if (cfg.has("mpc", "t_delta")) {
    const auto v = cfg.numbers("mpc", "t_delta");
    if (v.size() != 4) throw ConfigError("mpc.t_delta needs 4 flags");
    for (int i = 0; i < 4; ++i) a.steering[i] = v[i] != 0.0;
  }
  return a;
}

}  // namespace latmpc
