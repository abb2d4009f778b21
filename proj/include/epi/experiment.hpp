#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "epi/config.hpp"
#include "epi/sis_engine.hpp"

namespace epi {

// Synthetic epidemic with regime changes applied through checkpoint restores,
// plus the biased surveillance stream derived from it. `reported_cases` and
// `deaths` are the observable targets; `true_cases` stays hidden from
// calibration.
struct GroundTruth {
  std::vector<std::int64_t> true_cases;
  std::vector<std::int64_t> reported_cases;
  std::vector<std::int64_t> deaths;
};

GroundTruth generate_ground_truth(const ExperimentConfig& cfg);

// Type-7 (linear interpolation) quantiles of `values` at probabilities `ps`.
std::vector<double> quantiles(std::vector<double> values, std::span<const double> ps);

// [q_lo, q_hi] of a weighted sample: smallest values whose cumulative
// normalized weight reaches each target probability.
std::pair<double, double> weighted_interval(std::span<const double> values,
                                            std::span<const double> weights, double lo_p,
                                            double hi_p);

struct RibbonRow {
  int day = 0;
  std::string series;
  double q05 = 0, q25 = 0, q50 = 0, q75 = 0, q95 = 0;
};

// Pointwise ribbon rows (series: reported_cases, true_cases, deaths) over the
// survivor cloud, days 0..horizon.
std::vector<RibbonRow> summarize(const SurvivorBundle& survivors);

// Runs the full calibration: regenerates the observable truth, runs every
// window, and writes the output bundle into `out_dir`:
//   ground_truth.csv, posterior_window_<m>.csv, trajectories.csv,
//   ribbons.csv, manifest.json, checkpoints/.
// Returns the in-memory result for further inspection.
struct CalibrationOutput {
  GroundTruth truth;
  SequentialResult result;
};
CalibrationOutput calibrate(const ExperimentConfig& cfg, const ConfigFile& echo,
                            const std::string& targets, const std::filesystem::path& out_dir);

// Recomputes ribbons.csv from a previously written trajectories.csv.
void summarize_directory(const std::filesystem::path& out_dir);

struct WindowVerify {
  int window = 0;
  double theta_lo = 0, theta_hi = 0, theta_truth = 0;
  double rho_lo = 0, rho_hi = 0, rho_truth = 0;
  bool theta_covered = false;
  bool rho_covered = false;
};

struct VerifyReport {
  std::vector<WindowVerify> windows;
  int theta_covered_count = 0;
  int rho_covered_count = 0;
};

// Joins the posterior dumps in `out_dir` against the configured truth
// schedules: central 90% weighted intervals per window vs the value in effect
// at the window's end day. Also writes verification.txt into `out_dir`.
VerifyReport verify_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
std::string verify_text(const VerifyReport& report);

// Writes day,reported_cases,deaths (and true_cases when `include_hidden`).
void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path,
                     bool include_hidden);

}  // namespace epi
