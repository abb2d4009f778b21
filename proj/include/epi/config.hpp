#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "epi/sim_params.hpp"
#include "epi/sis_engine.hpp"

namespace epi {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Minimal INI-style file: [section] headers, key = value lines, '#' or ';'
// comments, blank lines ignored. Values keep internal whitespace.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  // Deterministic dump (sections and keys sorted) used for config echo.
  std::string to_string() const;
  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return data_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
  std::string origin_;
};

// "0:0.3, 34:0.27" -> {{0, 0.3}, {34, 0.27}}; piecewise-constant from each
// breakpoint onward. Must start at day 0 with strictly increasing days.
std::vector<std::pair<int, double>> parse_schedule(const std::string& text);
// Value in effect on `day` for a parsed schedule.
double schedule_value(const std::vector<std::pair<int, double>>& schedule, int day);
// "33, 47, 61, 90" -> {33, 47, 61, 90}, strictly increasing positives.
std::vector<int> parse_int_list(const std::string& text);

// Fully resolved experiment description: simulator, ground-truth schedules,
// windowing plan, and calibration budgets.
struct ExperimentConfig {
  std::int64_t population = 100000;
  std::int64_t initial_exposed = 10;
  int horizon = 90;
  SimParams params;

  std::vector<std::pair<int, double>> theta_schedule;  // ground truth
  std::vector<std::pair<int, double>> rho_schedule;

  WindowPlan plan;
  std::uint64_t master_seed = 1;
  int parallelism = 1;

  static ExperimentConfig from_config(const ConfigFile& file);
  void validate() const;
};

}  // namespace epi
