#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "epi/checkpoint_store.hpp"
#include "epi/likelihood.hpp"
#include "epi/rng.hpp"
#include "epi/sim_params.hpp"
#include "epi/trajectory.hpp"

namespace epi {

// Raised when every candidate in a window carries zero likelihood.
class DegenerateWeightsError : public std::runtime_error {
 public:
  explicit DegenerateWeightsError(const std::string& what) : std::runtime_error(what) {}
};

struct PriorSpec {
  double theta_lo = 0.1;
  double theta_hi = 0.5;
  double rho_alpha = 4.0;
  double rho_beta = 1.0;
  void validate() const;
};

// Proposal jitter half-widths; the reporting-bias kernel is asymmetric
// (narrow downward, wide upward) and both laws truncate to the support.
struct JitterSpec {
  double delta_theta = 0.05;
  double delta_rho_down = 0.05;
  double delta_rho_up = 0.15;
  void validate() const;
};

struct ParamPair {
  double theta = 0.0;
  double rho = 0.0;
};

// --- Independently testable algorithm pieces -------------------------------

// Log weights -> normalized weights via max-shifted exponentiation. Entries
// of -inf map to exactly 0; if every entry is -inf (or the list is empty)
// throws DegenerateWeightsError.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

// Kish effective sample size 1 / sum(w_i^2) of normalized weights.
double effective_sample_size(std::span<const double> norm_weights);

// K independent categorical draws (expected copies of i = k * w_i).
std::vector<std::uint32_t> multinomial_resample(std::span<const double> norm_weights,
                                                std::size_t k, Rng& rng);
// Low-variance alternative: one uniform offset, K stratified points.
std::vector<std::uint32_t> systematic_resample(std::span<const double> norm_weights,
                                               std::size_t k, Rng& rng);

// n (theta, rho) pairs; theta ~ U(lo, hi), rho ~ Beta(alpha, beta), drawn in
// that order per pair.
std::vector<ParamPair> sample_prior(const PriorSpec& prior, std::size_t n, Rng& rng);

// Uniform jitter around `center`, truncated to the prior box for theta and to
// (0, 1] for rho. Zero half-widths return the center exactly.
ParamPair jitter_params(const ParamPair& center, const JitterSpec& jitter,
                        const PriorSpec& support, Rng& rng);

// --- Windowed engine --------------------------------------------------------

struct WindowPlan {
  std::vector<int> boundaries;  // strictly increasing window end days
  int first_obs_day = 1;        // window 1 is scored on [first_obs_day, boundaries[0]]
  int pairs = 1000;             // parameter pairs per window (n)
  int replicates = 10;          // replicate simulation seeds per pair (R)
  int resample_size = 1000;     // survivors kept per window (K)
  PriorSpec prior;
  JitterSpec jitter;
  LikelihoodSpec cases_like;
  LikelihoodSpec deaths_like;
  bool use_deaths = false;
  bool systematic = false;
  void validate() const;
  int windows() const { return static_cast<int>(boundaries.size()); }
  int coverage_begin(int m) const;  // 1-based window index
  int coverage_end(int m) const;
};

struct Observations {
  std::vector<std::int64_t> reported_cases;  // indexed by day, 0..horizon
  std::vector<std::int64_t> deaths;
};

struct ParticleRecord {
  std::uint32_t id = 0;
  std::uint32_t ancestor = 0;  // candidate id in the previous window (self in window 1)
  double theta = 0.0;
  double rho = 0.0;
  std::uint64_t sim_seed = 0;
  double log_weight = 0.0;
  std::uint32_t resampled_count = 0;
};

struct WindowResult {
  int window = 0;  // 1-based
  int day_begin = 0;
  int day_end = 0;
  double ess = 0.0;
  std::vector<ParticleRecord> particles;
  std::vector<double> norm_weights;        // aligned with particles
  std::vector<std::uint32_t> resampled;    // K candidate ids in draw order
};

// Per-survivor series stitched across windows (index = final resample slot).
struct SurvivorBundle {
  std::vector<std::vector<std::int64_t>> reported;    // thinned, stitched per window
  std::vector<std::vector<std::int64_t>> true_cases;  // from the survivor's own ledger
  std::vector<std::vector<std::int64_t>> deaths;
  std::vector<std::vector<ParamPair>> params_by_window;  // [slot][window-1]
};

struct SequentialResult {
  std::vector<WindowResult> windows;
  SurvivorBundle survivors;
};

struct SisConfig {
  std::int64_t population = 100000;
  std::int64_t initial_exposed = 10;
  SimParams base_params;
  WindowPlan plan;
  std::uint64_t master_seed = 1;
  int parallelism = 1;
};

class SisEngine {
 public:
  // `dump_dir`, when non-empty, receives posterior_window_<m>.csv after each
  // window completes.
  SisEngine(SisConfig cfg, CheckpointStore& store, std::filesystem::path dump_dir = {});

  // Runs window m (must be the next unfinished window, 1-based).
  const WindowResult& run_window(int m, const Observations& obs);
  // Runs every window in order and stitches survivor series.
  SequentialResult run_all(const Observations& obs);

  const std::vector<WindowResult>& windows() const { return windows_; }

 private:
  struct Proposal {
    std::vector<ParamPair> pairs;
    std::vector<std::uint32_t> ancestors;  // candidate ids in window m-1 (empty for m=1)
  };
  Proposal propose(int m);
  SurvivorBundle stitch() const;
  void dump_window_csv(const WindowResult& result) const;

  SisConfig cfg_;
  CheckpointStore& store_;
  std::filesystem::path dump_dir_;
  std::vector<WindowResult> windows_;
  // Per window: reported-case coverage slice for each distinct resampled id.
  std::vector<std::unordered_map<std::uint32_t, std::vector<std::int64_t>>> kept_reported_;
  // Final window only: full-horizon true detected cases / deaths per id.
  std::unordered_map<std::uint32_t, std::vector<std::int64_t>> final_true_;
  std::unordered_map<std::uint32_t, std::vector<std::int64_t>> final_deaths_;
};

}  // namespace epi
