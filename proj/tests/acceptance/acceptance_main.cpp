// Acceptance gate for the calibration engine. Runs the ten release criteria
// in order and prints one PASS/FAIL line per criterion; exits nonzero when
// any criterion fails. The desk-scale criteria (7, 8, 10) run the full
// pipeline through the same calibrate() entry point the CLI uses.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epi/bias_model.hpp"
#include "epi/checkpoint_store.hpp"
#include "epi/config.hpp"
#include "epi/experiment.hpp"
#include "epi/likelihood.hpp"
#include "epi/rng.hpp"
#include "epi/seir_model.hpp"
#include "epi/sis_engine.hpp"

namespace fs = std::filesystem;
using namespace epi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_root() { return fs::temp_directory_path() / "epi-acceptance"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random-but-valid parameter set for the property criteria.
SimParams random_params(Rng& rng) {
  SimParams p;
  p.transmission_rate = rng.uniform(0.0, 0.8);
  p.frac_e_to_p = rng.uniform(0.2, 0.9);
  p.frac_p_to_sm = rng.uniform(0.2, 0.9);
  p.frac_h_to_c = rng.uniform(0.05, 0.6);
  p.frac_c_to_d = rng.uniform(0.05, 0.6);
  p.rel_infectiousness_symptomatic = rng.uniform(0.5, 2.0);
  p.rel_infectiousness_detected = rng.uniform(0.0, 0.5);
  p.detect_prob_a = rng.uniform(0.0, 1.0);
  p.detect_prob_p = rng.uniform(0.0, 1.0);
  p.detect_prob_sm = rng.uniform(0.0, 1.0);
  p.detect_prob_ss = rng.uniform(0.0, 1.0);
  p.detection_delay_days = 1 + static_cast<int>(rng.uniform_index(4));
  for (SojournSpec* s : {&p.sojourn_e, &p.sojourn_p, &p.sojourn_a, &p.sojourn_sm, &p.sojourn_ss,
                         &p.sojourn_h, &p.sojourn_c, &p.sojourn_hp}) {
    s->mean_days = rng.uniform(1.0, 8.0);
    s->shape = rng.uniform(1.0, 10.0);
  }
  return p;
}

// 1. Simulator invariants: conservation, death/recovery monotonicity, and
//    theta = 0 non-transmission over >= 200 random configs, in under a minute.
Outcome criterion_invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng meta(20250131);
  const int configs = 200;
  const int horizon = 40;
  int violations = 0;
  for (int c = 0; c < configs; ++c) {
    const SimParams p = random_params(meta);
    const std::int64_t population = 500 + static_cast<std::int64_t>(meta.uniform_index(20000));
    const std::int64_t exposed = 1 + static_cast<std::int64_t>(meta.uniform_index(60));
    const std::uint64_t seed = meta.next();

    SeirModel model(population, exposed, p, seed);
    model.advance(horizon);
    std::int64_t prev_d = -1;
    std::int64_t prev_r = -1;
    for (const DayRecord& rec : model.trajectory().days) {
      std::int64_t total = 0;
      for (std::uint32_t occ : rec.census) total += occ;
      if (total != population) ++violations;
      const std::int64_t d = rec.census[static_cast<std::size_t>(Compartment::D)];
      const std::int64_t r = rec.census[static_cast<std::size_t>(Compartment::R)];
      if (d < prev_d || r < prev_r) ++violations;
      prev_d = d;
      prev_r = r;
    }
    if (model.occupancy_sum() != population) ++violations;

    SimParams zero = p;
    zero.transmission_rate = 0.0;
    SeirModel calm(population, exposed, zero, seed);
    calm.advance(horizon);
    for (const DayRecord& rec : calm.trajectory().days) {
      if (rec.census[static_cast<std::size_t>(Compartment::S)] !=
          static_cast<std::uint32_t>(population - exposed)) {
        ++violations;
      }
    }
  }
  const double secs = elapsed_s(t0);
  Outcome o;
  o.pass = violations == 0 && secs < 60.0;
  o.detail = fmt("%d configs + theta=0 variants, %d violations, %.1fs", configs, violations, secs);
  return o;
}

// 2. Checkpoint transparency: straight run vs save/restore continuation give
//    byte-identical final checkpoints for 50 random configs and split days.
Outcome criterion_checkpoint() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng meta(7151623);
  const int configs = 50;
  const int horizon = 40;
  int mismatches = 0;
  for (int c = 0; c < configs; ++c) {
    const SimParams p = random_params(meta);
    const std::int64_t population = 500 + static_cast<std::int64_t>(meta.uniform_index(20000));
    const std::int64_t exposed = 1 + static_cast<std::int64_t>(meta.uniform_index(40));
    const std::uint64_t seed = meta.next();
    const int split = 1 + static_cast<int>(meta.uniform_index(horizon - 1));

    SeirModel straight(population, exposed, p, seed);
    straight.advance(horizon);

    SeirModel part(population, exposed, p, seed);
    part.advance(split);
    SeirModel resumed = SeirModel::restore(part.save_checkpoint());
    resumed.advance(horizon);

    if (straight.save_checkpoint() != resumed.save_checkpoint()) ++mismatches;
  }
  const double secs = elapsed_s(t0);
  Outcome o;
  o.pass = mismatches == 0 && secs < 60.0;
  o.detail = fmt("%d random split runs, %d mismatches, %.1fs", configs, mismatches, secs);
  return o;
}

// Two-sample Kolmogorov-Smirnov statistic over integer samples.
double ks_statistic(std::vector<std::int64_t> a, std::vector<std::int64_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    std::int64_t v;
    if (i < a.size() && j < b.size()) v = std::min(a[i], b[j]);
    else if (i < a.size()) v = a[i];
    else v = b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

// 3. Bias-model moments at (true=100, rho=0.6) plus the thinning composition
//    property rho1 o rho2 ~ rho1*rho2 under a two-sample KS test at alpha=0.01.
Outcome criterion_bias() {
  const std::size_t draws = 10000;
  const std::vector<std::int64_t> hundred(draws, 100);
  const std::vector<std::int64_t> thinned = thin_series(hundred, 0.6, 0xB1A5);
  double mean = 0.0;
  for (std::int64_t v : thinned) mean += static_cast<double>(v);
  mean /= static_cast<double>(draws);
  double var = 0.0;
  for (std::int64_t v : thinned) {
    const double r = static_cast<double>(v) - mean;
    var += r * r;
  }
  var /= static_cast<double>(draws - 1);
  const bool moments_ok = std::abs(mean - 60.0) <= 1.5 && std::abs(var - 24.0) <= 2.4;

  const std::size_t n = 4000;
  const std::vector<std::int64_t> fifty(n, 50);
  const std::vector<std::int64_t> composed =
      thin_series(thin_series(fifty, 0.8, 101), 0.5, 202);
  const std::vector<std::int64_t> direct = thin_series(fifty, 0.4, 303);
  const double d = ks_statistic(composed, direct);
  const double critical =
      1.628 * std::sqrt(static_cast<double>(2 * n) / (static_cast<double>(n) * n));
  const bool ks_ok = d < critical;

  Outcome o;
  o.pass = moments_ok && ks_ok;
  o.detail = fmt("mean %.3f (60+-1.5), var %.3f (24+-2.4), KS D %.4f vs %.4f", mean, var, d,
                 critical);
  return o;
}

// 4. Likelihood oracle: 1,000 random slices against an independent long-double
//    Gaussian log-density sum; zero-residual value equals -(T/2) log(2 pi).
Outcome criterion_likelihood() {
  Rng meta(424242);
  const long double pi_l = std::numbers::pi_v<long double>;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int days = 1 + static_cast<int>(meta.uniform_index(30));
    std::vector<std::int64_t> obs(days);
    std::vector<std::int64_t> sim(days);
    for (int i = 0; i < days; ++i) {
      obs[i] = static_cast<std::int64_t>(meta.uniform_index(2000));
      sim[i] = static_cast<std::int64_t>(meta.uniform_index(2000));
    }
    LikelihoodSpec spec;
    if (trial % 3 == 0) {
      spec.sigma_by_day.resize(days);
      for (double& s : spec.sigma_by_day) s = meta.uniform(0.3, 3.0);
    } else {
      spec.sigma = meta.uniform(0.3, 3.0);
    }
    const double got = window_log_likelihood(obs, sim, spec);
    long double want = 0.0L;
    for (int i = 0; i < days; ++i) {
      const long double s = spec.sigma_at(static_cast<std::size_t>(i));
      const long double r = sqrtl(static_cast<long double>(obs[i])) -
                            sqrtl(static_cast<long double>(sim[i]));
      want += -0.5L * logl(2.0L * pi_l * s * s) - r * r / (2.0L * s * s);
    }
    const long double rel =
        fabsl(static_cast<long double>(got) - want) / std::max(1.0L, fabsl(want));
    worst = std::max(worst, static_cast<double>(rel));
  }
  const bool oracle_ok = worst <= 1e-12;

  const std::vector<std::int64_t> equal(6, 7);
  const double zero_residual = window_log_likelihood(equal, equal, LikelihoodSpec{});
  const double expected = -3.0 * std::log(2.0 * std::numbers::pi);
  const double zero_diff = std::abs(zero_residual - expected);
  const bool zero_ok = zero_diff <= 1e-14;

  Outcome o;
  o.pass = oracle_ok && zero_ok;
  o.detail = fmt("1000 slices, worst rel err %.2e (<=1e-12), zero-residual diff %.1e", worst,
                 zero_diff);
  return o;
}

// 5. SIS exactness on an enumerable instance: 3 particles, 2 observation days;
//    engine weight path vs brute-force linear-space Bayes enumeration.
Outcome criterion_toy_sis() {
  const std::array<double, 3> thetas{0.15, 0.45, 0.85};
  const std::array<double, 3> rhos{0.5, 0.7, 0.9};
  const std::vector<std::int64_t> obs{2, 4};
  const LikelihoodSpec spec;

  std::array<std::vector<std::int64_t>, 3> sims;
  std::vector<double> log_weights(3);
  for (std::size_t i = 0; i < 3; ++i) {
    SimParams p;
    p.transmission_rate = thetas[i];
    SeirModel model(60, 6, p, derive_seed(9, {static_cast<std::uint64_t>(i)}));
    model.advance(2);
    const std::vector<std::int64_t> detected = model.trajectory().detected_cases();
    const std::vector<std::int64_t> slice(detected.begin() + 1, detected.end());
    sims[i] = thin_series(slice, rhos[i], derive_seed(10, {static_cast<std::uint64_t>(i)}));
    log_weights[i] = window_log_likelihood(obs, sims[i], spec);
  }
  const std::vector<double> got = normalize_log_weights(log_weights);

  const long double pi_l = std::numbers::pi_v<long double>;
  std::array<long double, 3> enumerated{};
  long double total = 0.0L;
  for (std::size_t i = 0; i < 3; ++i) {
    long double density = 1.0L;
    for (std::size_t d = 0; d < obs.size(); ++d) {
      const long double r = sqrtl(static_cast<long double>(obs[d])) -
                            sqrtl(static_cast<long double>(sims[i][d]));
      density *= expl(-r * r / 2.0L) / sqrtl(2.0L * pi_l);
    }
    enumerated[i] = density;
    total += density;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(got[i] - static_cast<double>(enumerated[i] / total)));
  }
  Outcome o;
  o.pass = worst <= 1e-10;
  o.detail = fmt("max |SIS - enumeration| = %.2e (<=1e-10)", worst);
  return o;
}

// 6. Resampling unbiasedness: mean of f(theta)=theta over 2,000 reseeded
//    multinomial resamples of a fixed 100-particle set vs the weighted mean.
Outcome criterion_resampling() {
  const int n = 100;
  std::vector<double> theta(n);
  std::vector<double> log_weights(n);
  for (int i = 0; i < n; ++i) {
    theta[i] = 0.1 + 0.4 * static_cast<double>(i) / (n - 1);
    log_weights[i] = 3.0 * std::sin(0.37 * i);
  }
  const std::vector<double> w = normalize_log_weights(log_weights);
  double mu = 0.0;
  for (int i = 0; i < n; ++i) mu += w[i] * theta[i];
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += w[i] * (theta[i] - mu) * (theta[i] - mu);

  const int resamples = 2000;
  const std::size_t k = 100;
  long double total = 0.0L;
  for (int r = 0; r < resamples; ++r) {
    Rng rng(derive_seed(606, {static_cast<std::uint64_t>(r)}));
    for (std::uint32_t id : multinomial_resample(w, k, rng)) total += theta[id];
  }
  const double draws = static_cast<double>(resamples) * static_cast<double>(k);
  const double mean = static_cast<double>(total) / draws;
  const double se = std::sqrt(var / draws);
  Outcome o;
  o.pass = std::abs(mean - mu) <= 3.0 * se;
  o.detail = fmt("|%.6f - %.6f| = %.2e vs 3 SE = %.2e", mean, mu, std::abs(mean - mu), 3.0 * se);
  return o;
}

// Shared state for the paired desk-scale criteria (7 and 8): 10 master seeds,
// each calibrated against cases-only and cases+deaths.
struct DeskRuns {
  bool ran = false;
  std::string error;
  int windows = 0;
  std::array<std::vector<int>, 2> covered;  // [target][window] coverage counts
  std::array<double, 10> width_cases{};
  std::array<double, 10> width_dual{};
  double secs = 0.0;
};

double mean_reported_width(const std::vector<RibbonRow>& rows) {
  double sum = 0.0;
  int count = 0;
  for (const RibbonRow& row : rows) {
    if (row.series != "reported_cases") continue;
    sum += row.q95 - row.q05;
    ++count;
  }
  if (count == 0) throw std::runtime_error("no reported_cases ribbon rows");
  return sum / count;
}

const DeskRuns& desk_runs() {
  static DeskRuns runs;
  if (runs.ran) return runs;
  runs.ran = true;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ConfigFile file = ConfigFile::parse_file("configs/desk.cfg");
    const ExperimentConfig base = ExperimentConfig::from_config(file);
    runs.windows = base.plan.windows();
    runs.covered[0].assign(runs.windows, 0);
    runs.covered[1].assign(runs.windows, 0);

    const fs::path root = work_root() / "desk";
    for (int i = 0; i < 10; ++i) {
      const std::uint64_t seed = 101 + static_cast<std::uint64_t>(i);
      for (int t = 0; t < 2; ++t) {
        const std::string targets = t == 0 ? "cases" : "cases+deaths";
        ExperimentConfig cfg = base;
        cfg.master_seed = seed;
        ConfigFile echo = file;
        echo.set("run", "master_seed", std::to_string(seed));
        const fs::path out = root / fmt("s%llu_%s", static_cast<unsigned long long>(seed),
                                        t == 0 ? "cases" : "dual");
        const CalibrationOutput result = calibrate(cfg, echo, targets, out);
        const VerifyReport report = verify_run(cfg, out);
        for (int m = 0; m < runs.windows; ++m) {
          runs.covered[t][m] += report.windows[static_cast<std::size_t>(m)].theta_covered ? 1 : 0;
        }
        const double width = mean_reported_width(summarize(result.result.survivors));
        (t == 0 ? runs.width_cases : runs.width_dual)[static_cast<std::size_t>(i)] = width;
        fs::remove_all(out);
        std::fprintf(stderr, "  desk run %2d/20: seed %llu, %-12s ribbon width %.2f\n",
                     i * 2 + t + 1, static_cast<unsigned long long>(seed), targets.c_str(),
                     width);
      }
    }
  } catch (const std::exception& ex) {
    runs.error = ex.what();
  }
  runs.secs = elapsed_s(t0);
  return runs;
}

std::string coverage_list(const std::vector<int>& counts) {
  std::string out = "[";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out += (i ? " " : "") + std::to_string(counts[i]);
  }
  return out + "]";
}

// 7. Posterior coverage at desk scale: per-window central 90% interval for
//    theta covers the true window value in >= 8/10 seeds, all windows, both
//    target sets.
Outcome criterion_coverage() {
  const DeskRuns& runs = desk_runs();
  if (!runs.error.empty()) throw std::runtime_error(runs.error);
  bool ok = runs.windows > 0;
  for (int t = 0; t < 2; ++t) {
    for (int m = 0; m < runs.windows; ++m) ok = ok && runs.covered[t][m] >= 8;
  }
  Outcome o;
  o.pass = ok;
  o.detail = fmt("theta covered/10 by window: cases %s, cases+deaths %s (20 runs, %.0fs)",
                 coverage_list(runs.covered[0]).c_str(), coverage_list(runs.covered[1]).c_str(),
                 runs.secs);
  return o;
}

// 8. Uncertainty reduction from deaths: mean pointwise 90% reported-case
//    ribbon width under cases+deaths <= cases-only in >= 7/10 seed pairs.
Outcome criterion_width() {
  const DeskRuns& runs = desk_runs();
  if (!runs.error.empty()) throw std::runtime_error(runs.error);
  int wins = 0;
  double mean_cases = 0.0;
  double mean_dual = 0.0;
  for (int i = 0; i < 10; ++i) {
    if (runs.width_dual[i] <= runs.width_cases[i]) ++wins;
    mean_cases += runs.width_cases[i] / 10.0;
    mean_dual += runs.width_dual[i] / 10.0;
  }
  Outcome o;
  o.pass = wins >= 7;
  o.detail = fmt("cases+deaths narrower in %d/10 pairs (mean width %.2f vs %.2f)", wins,
                 mean_dual, mean_cases);
  return o;
}

// 9. Scheduling invariance: a 100-candidate window at parallelism 1 and 8
//    produces byte-identical posterior dumps.
Outcome criterion_scheduling() {
  SimParams params;
  SeirModel truth(20000, 20, params, 4242);
  truth.advance(12);
  Observations obs;
  obs.reported_cases = thin_series(truth.trajectory().detected_cases(), 0.7, derive_seed(4242, {1}));
  obs.deaths = truth.trajectory().deaths();

  SisConfig sis;
  sis.population = 20000;
  sis.initial_exposed = 20;
  sis.base_params = params;
  sis.plan.boundaries = {12};
  sis.plan.pairs = 50;
  sis.plan.replicates = 2;
  sis.plan.resample_size = 50;
  sis.master_seed = 77;

  std::array<std::string, 2> dumps;
  for (int run = 0; run < 2; ++run) {
    sis.parallelism = run == 0 ? 1 : 8;
    const fs::path dir = work_root() / "par" / (run == 0 ? "p1" : "p8");
    fs::create_directories(dir);
    CheckpointStore store(dir / "store");
    SisEngine engine(sis, store, dir);
    engine.run_all(obs);
    dumps[run] = slurp(dir / "posterior_window_1.csv");
  }
  Outcome o;
  o.pass = !dumps[0].empty() && dumps[0] == dumps[1];
  o.detail = fmt("posterior dumps %s (%zu bytes)", o.pass ? "identical" : "DIFFER",
                 dumps[0].size());
  return o;
}

// 10. End-to-end determinism: two desk-scale calibrate runs with identical
//     config and master seed produce byte-identical output directories.
Outcome criterion_determinism() {
  const ConfigFile file = ConfigFile::parse_file("configs/desk.cfg");
  const ExperimentConfig cfg = ExperimentConfig::from_config(file);
  const fs::path dir_a = work_root() / "det" / "a";
  const fs::path dir_b = work_root() / "det" / "b";
  calibrate(cfg, file, "cases+deaths", dir_a);
  calibrate(cfg, file, "cases+deaths", dir_b);

  const auto listing = [](const fs::path& root) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root));
    }
    std::sort(rel.begin(), rel.end());
    return rel;
  };
  const std::vector<fs::path> files_a = listing(dir_a);
  const std::vector<fs::path> files_b = listing(dir_b);

  bool same = files_a == files_b && !files_a.empty();
  std::string first_diff;
  if (same) {
    for (const fs::path& rel : files_a) {
      if (slurp(dir_a / rel) != slurp(dir_b / rel)) {
        same = false;
        first_diff = rel.string();
        break;
      }
    }
  } else {
    first_diff = "file sets differ";
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  Outcome o;
  o.pass = same;
  o.detail = same ? fmt("%zu files byte-identical", files_a.size())
                  : fmt("mismatch: %s", first_diff.c_str());
  return o;
}

}  // namespace

int main() {
  fs::remove_all(work_root());
  fs::create_directories(work_root());

  struct Entry {
    int id;
    const char* label;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> gate = {
      {1, "simulator invariants", criterion_invariants},
      {2, "checkpoint transparency", criterion_checkpoint},
      {3, "bias moments + composition", criterion_bias},
      {4, "likelihood oracle", criterion_likelihood},
      {5, "SIS exactness (enumeration)", criterion_toy_sis},
      {6, "resampling unbiasedness", criterion_resampling},
      {7, "posterior coverage, desk scale", criterion_coverage},
      {8, "uncertainty reduction (deaths)", criterion_width},
      {9, "scheduling invariance", criterion_scheduling},
      {10, "end-to-end determinism", criterion_determinism},
  };

  int failed = 0;
  for (const Entry& entry : gate) {
    Outcome outcome;
    try {
      outcome = entry.fn();
    } catch (const std::exception& ex) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + ex.what();
    }
    std::printf("[%s] %2d %-32s %s\n", outcome.pass ? "PASS" : "FAIL", entry.id, entry.label,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  }
  fs::remove_all(work_root());
  if (failed == 0) {
    std::printf("acceptance: all %zu criteria passed\n", gate.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failed, gate.size());
  }
  return failed == 0 ? 0 : 1;
}
