// INI-style configuration parsing and the experiment schema built on it.
#include "epi/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace epi {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + s + "' as a number");
  }
}

std::int64_t to_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(what + ": cannot parse '" + s + "' as an integer");
  }
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      cfg.data_[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.data_[section][key] = value;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto sec = data_.find(section);
  return sec != data_.end() && sec->second.contains(key);
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key) const {
  const auto sec = data_.find(section);
  if (sec != data_.end()) {
    const auto it = sec->second.find(key);
    if (it != sec->second.end()) return it->second;
  }
  throw ConfigError(origin_ + ": missing required key [" + section + "] " + key);
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  return has(section, key) ? get_str(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  return to_double(get_str(section, key), "[" + section + "] " + key);
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                                 std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  return to_int(get_str(section, key), "[" + section + "] " + key);
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_str(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + v + "'");
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
  data_[section][key] = value;
}

std::string ConfigFile::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, kv] : data_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
  }
  return out.str();
}

std::vector<std::pair<int, double>> parse_schedule(const std::string& text) {
  std::vector<std::pair<int, double>> schedule;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string entry = trim(item);
    if (entry.empty()) continue;
    const std::size_t colon = entry.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("schedule entry '" + entry + "' is not day:value");
    }
    const int day = static_cast<int>(to_int(trim(entry.substr(0, colon)), "schedule day"));
    const double value = to_double(trim(entry.substr(colon + 1)), "schedule value");
    schedule.emplace_back(day, value);
  }
  if (schedule.empty()) throw ConfigError("empty schedule");
  if (schedule.front().first != 0) {
    throw ConfigError("schedule must start at day 0 to cover the full horizon");
  }
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].first <= schedule[i - 1].first) {
      throw ConfigError("schedule days must be strictly increasing");
    }
  }
  return schedule;
}

double schedule_value(const std::vector<std::pair<int, double>>& schedule, int day) {
  if (schedule.empty()) throw ConfigError("empty schedule");
  double value = schedule.front().second;
  for (const auto& [from, v] : schedule) {
    if (from > day) break;
    value = v;
  }
  return value;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string entry = trim(item);
    if (entry.empty()) continue;
    out.push_back(static_cast<int>(to_int(entry, "list entry")));
  }
  if (out.empty()) throw ConfigError("empty integer list");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw ConfigError("list must be strictly increasing");
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  cfg.population = file.get_int("simulation", "population", cfg.population);
  cfg.initial_exposed = file.get_int("simulation", "initial_exposed", cfg.initial_exposed);
  cfg.horizon = static_cast<int>(file.get_int("simulation", "horizon", cfg.horizon));

  SimParams& p = cfg.params;
  p.frac_e_to_p = file.get_double("model", "frac_e_to_p", p.frac_e_to_p);
  p.frac_p_to_sm = file.get_double("model", "frac_p_to_sm", p.frac_p_to_sm);
  p.frac_h_to_c = file.get_double("model", "frac_h_to_c", p.frac_h_to_c);
  p.frac_c_to_d = file.get_double("model", "frac_c_to_d", p.frac_c_to_d);
  p.rel_infectiousness_symptomatic =
      file.get_double("model", "rel_infectiousness_symptomatic", p.rel_infectiousness_symptomatic);
  p.rel_infectiousness_detected =
      file.get_double("model", "rel_infectiousness_detected", p.rel_infectiousness_detected);
  p.detect_prob_a = file.get_double("model", "detect_prob_a", p.detect_prob_a);
  p.detect_prob_p = file.get_double("model", "detect_prob_p", p.detect_prob_p);
  p.detect_prob_sm = file.get_double("model", "detect_prob_sm", p.detect_prob_sm);
  p.detect_prob_ss = file.get_double("model", "detect_prob_ss", p.detect_prob_ss);
  p.detection_delay_days =
      static_cast<int>(file.get_int("model", "detection_delay_days", p.detection_delay_days));
  auto sojourn = [&](const char* key, SojournSpec& spec) {
    spec.mean_days = file.get_double("sojourns", std::string(key) + "_mean", spec.mean_days);
    spec.shape = file.get_double("sojourns", std::string(key) + "_shape", spec.shape);
  };
  sojourn("e", p.sojourn_e);
  sojourn("p", p.sojourn_p);
  sojourn("a", p.sojourn_a);
  sojourn("sm", p.sojourn_sm);
  sojourn("ss", p.sojourn_ss);
  sojourn("h", p.sojourn_h);
  sojourn("c", p.sojourn_c);
  sojourn("hp", p.sojourn_hp);

  cfg.theta_schedule = parse_schedule(file.get_str("truth", "theta_schedule", "0:0.3"));
  cfg.rho_schedule = parse_schedule(file.get_str("truth", "rho_schedule", "0:0.6"));
  p.transmission_rate = cfg.theta_schedule.front().second;

  WindowPlan& plan = cfg.plan;
  if (file.has("calibration", "window_boundaries")) {
    plan.boundaries = parse_int_list(file.get_str("calibration", "window_boundaries"));
  } else {
    plan.boundaries = {cfg.horizon};
  }
  plan.first_obs_day =
      static_cast<int>(file.get_int("calibration", "first_obs_day", plan.first_obs_day));
  plan.pairs = static_cast<int>(file.get_int("calibration", "pairs", plan.pairs));
  plan.replicates = static_cast<int>(file.get_int("calibration", "replicates", plan.replicates));
  plan.resample_size =
      static_cast<int>(file.get_int("calibration", "resample_size", plan.resample_size));
  plan.prior.theta_lo = file.get_double("calibration", "prior_theta_lo", plan.prior.theta_lo);
  plan.prior.theta_hi = file.get_double("calibration", "prior_theta_hi", plan.prior.theta_hi);
  plan.prior.rho_alpha = file.get_double("calibration", "prior_rho_alpha", plan.prior.rho_alpha);
  plan.prior.rho_beta = file.get_double("calibration", "prior_rho_beta", plan.prior.rho_beta);
  plan.jitter.delta_theta =
      file.get_double("calibration", "jitter_theta", plan.jitter.delta_theta);
  plan.jitter.delta_rho_down =
      file.get_double("calibration", "jitter_rho_down", plan.jitter.delta_rho_down);
  plan.jitter.delta_rho_up =
      file.get_double("calibration", "jitter_rho_up", plan.jitter.delta_rho_up);
  plan.cases_like.sigma = file.get_double("calibration", "sigma_cases", plan.cases_like.sigma);
  plan.deaths_like.sigma = file.get_double("calibration", "sigma_deaths", plan.deaths_like.sigma);
  plan.systematic = file.get_bool("calibration", "systematic_resampling", plan.systematic);

  cfg.master_seed = static_cast<std::uint64_t>(file.get_int("run", "seed", 1));
  cfg.parallelism = static_cast<int>(file.get_int("run", "parallelism", 1));

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (population <= 0) throw ConfigError("population must be positive");
  if (initial_exposed <= 0 || initial_exposed > population) {
    throw ConfigError("initial_exposed must be in (0, population]");
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  params.validate();
  for (const auto& [day, theta] : theta_schedule) {
    if (day < 0 || day > horizon) throw ConfigError("theta schedule day outside horizon");
    if (theta < 0.0) throw ConfigError("theta schedule value must be >= 0");
  }
  for (const auto& [day, rho] : rho_schedule) {
    if (day < 0 || day > horizon) throw ConfigError("rho schedule day outside horizon");
    if (rho <= 0.0 || rho > 1.0) throw ConfigError("rho schedule value must be in (0, 1]");
  }
  plan.validate();
  if (plan.boundaries.back() != horizon) {
    throw ConfigError("last window boundary must equal the horizon");
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

}  // namespace epi
