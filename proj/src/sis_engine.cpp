// Windowed sequential importance sampling over checkpointed simulations.
#include "epi/sis_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "epi/bias_model.hpp"
#include "epi/ensemble.hpp"

namespace epi {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRhoFloor = 1e-9;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = 1.0;
  return cdf;
}

}  // namespace

void PriorSpec::validate() const {
  if (!(theta_lo < theta_hi)) throw std::invalid_argument("prior: theta_lo < theta_hi required");
  if (!(theta_lo >= 0.0)) throw std::invalid_argument("prior: theta_lo must be >= 0");
  if (!(rho_alpha > 0.0) || !(rho_beta > 0.0)) {
    throw std::invalid_argument("prior: Beta parameters must be positive");
  }
}

void JitterSpec::validate() const {
  if (delta_theta < 0.0 || delta_rho_down < 0.0 || delta_rho_up < 0.0) {
    throw std::invalid_argument("jitter: half-widths must be >= 0");
  }
}

void WindowPlan::validate() const {
  if (boundaries.empty()) throw std::invalid_argument("plan: no window boundaries");
  int prev = first_obs_day - 1;
  for (int b : boundaries) {
    if (b <= prev) throw std::invalid_argument("plan: boundaries must increase past first_obs_day");
    prev = b;
  }
  if (first_obs_day < 1) throw std::invalid_argument("plan: first_obs_day must be >= 1");
  if (pairs < 1 || replicates < 1) throw std::invalid_argument("plan: pairs/replicates must be >= 1");
  if (resample_size < 1) throw std::invalid_argument("plan: resample_size must be >= 1");
  prior.validate();
  jitter.validate();
}

int WindowPlan::coverage_begin(int m) const { return m == 1 ? 1 : boundaries[m - 2] + 1; }
int WindowPlan::coverage_end(int m) const { return boundaries[m - 1]; }

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw DegenerateWeightsError("empty weight vector");
  double max_lw = kNegInf;
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw std::invalid_argument("NaN log weight");
    max_lw = std::max(max_lw, lw);
  }
  if (max_lw == kNegInf) {
    throw DegenerateWeightsError("all log weights are -inf; no candidate explains the data");
  }
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - max_lw);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

double effective_sample_size(std::span<const double> norm_weights) {
  if (norm_weights.empty()) throw std::invalid_argument("ESS of empty weight vector");
  double sum_sq = 0.0;
  for (double w : norm_weights) sum_sq += w * w;
  return 1.0 / sum_sq;
}

std::vector<std::uint32_t> multinomial_resample(std::span<const double> norm_weights,
                                                std::size_t k, Rng& rng) {
  if (norm_weights.empty()) throw std::invalid_argument("resample from empty weight vector");
  const std::vector<double> cdf = cumulative(norm_weights);
  std::vector<std::uint32_t> picks(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    picks[j] = static_cast<std::uint32_t>(std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
  }
  return picks;
}

std::vector<std::uint32_t> systematic_resample(std::span<const double> norm_weights,
                                               std::size_t k, Rng& rng) {
  if (norm_weights.empty()) throw std::invalid_argument("resample from empty weight vector");
  if (k == 0) return {};
  const std::vector<double> cdf = cumulative(norm_weights);
  const double step = 1.0 / static_cast<double>(k);
  double point = rng.uniform() * step;
  std::vector<std::uint32_t> picks(k);
  std::size_t idx = 0;
  for (std::size_t j = 0; j < k; ++j) {
    while (idx + 1 < cdf.size() && cdf[idx] < point) ++idx;
    picks[j] = static_cast<std::uint32_t>(idx);
    point += step;
  }
  return picks;
}

std::vector<ParamPair> sample_prior(const PriorSpec& prior, std::size_t n, Rng& rng) {
  prior.validate();
  std::vector<ParamPair> pairs(n);
  for (ParamPair& p : pairs) {
    p.theta = rng.uniform(prior.theta_lo, prior.theta_hi);
    p.rho = beta_draw(rng, prior.rho_alpha, prior.rho_beta);
  }
  return pairs;
}

ParamPair jitter_params(const ParamPair& center, const JitterSpec& jitter,
                        const PriorSpec& support, Rng& rng) {
  ParamPair out;
  const double tlo = std::max(support.theta_lo, center.theta - jitter.delta_theta);
  const double thi = std::min(support.theta_hi, center.theta + jitter.delta_theta);
  out.theta = tlo < thi ? rng.uniform(tlo, thi) : tlo;
  const double rlo = std::max(kRhoFloor, center.rho - jitter.delta_rho_down);
  const double rhi = std::min(1.0, center.rho + jitter.delta_rho_up);
  out.rho = rlo < rhi ? rng.uniform(rlo, rhi) : rlo;
  return out;
}

SisEngine::SisEngine(SisConfig cfg, CheckpointStore& store, std::filesystem::path dump_dir)
    : cfg_(std::move(cfg)), store_(store), dump_dir_(std::move(dump_dir)) {
  cfg_.plan.validate();
  cfg_.base_params.validate();
  if (cfg_.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  if (!dump_dir_.empty()) std::filesystem::create_directories(dump_dir_);
}

SisEngine::Proposal SisEngine::propose(int m) {
  const WindowPlan& plan = cfg_.plan;
  const std::size_t n = static_cast<std::size_t>(plan.pairs);
  Proposal prop;
  if (m == 1) {
    Rng rng(derive_seed(cfg_.master_seed,
                        {static_cast<std::uint64_t>(m),
                         static_cast<std::uint64_t>(StreamPurpose::Prior)}));
    prop.pairs = sample_prior(plan.prior, n, rng);
    return prop;
  }
  const WindowResult& prev = windows_[static_cast<std::size_t>(m - 2)];
  Rng rng(derive_seed(cfg_.master_seed,
                      {static_cast<std::uint64_t>(m),
                       static_cast<std::uint64_t>(StreamPurpose::Jitter)}));
  prop.pairs.resize(n);
  prop.ancestors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Uniform over resample slots = selection proportional to survivor
    // multiplicity.
    const std::uint32_t slot =
        static_cast<std::uint32_t>(rng.uniform_index(prev.resampled.size()));
    const std::uint32_t cand = prev.resampled[slot];
    prop.ancestors[i] = cand;
    const ParticleRecord& rec = prev.particles[cand];
    prop.pairs[i] = jitter_params({rec.theta, rec.rho}, plan.jitter, plan.prior, rng);
  }
  return prop;
}

const WindowResult& SisEngine::run_window(int m, const Observations& obs) {
  const WindowPlan& plan = cfg_.plan;
  if (m != static_cast<int>(windows_.size()) + 1 || m > plan.windows()) {
    throw std::invalid_argument("run_window: window " + std::to_string(m) +
                                " is not the next unfinished window");
  }
  const int a = plan.coverage_begin(m);
  const int b = plan.coverage_end(m);
  const int wa = m == 1 ? plan.first_obs_day : a;
  if (static_cast<int>(obs.reported_cases.size()) <= b) {
    throw std::invalid_argument("observations shorter than window end day");
  }
  if (plan.use_deaths && static_cast<int>(obs.deaths.size()) <= b) {
    throw std::invalid_argument("death observations shorter than window end day");
  }

  const std::size_t n = static_cast<std::size_t>(plan.pairs);
  const std::size_t reps = static_cast<std::size_t>(plan.replicates);
  const std::size_t total = n * reps;
  Proposal prop = propose(m);

  // Fresh replicate seed pool for this window, shared across parameter pairs.
  std::vector<std::uint64_t> pool(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    pool[r] = derive_seed(cfg_.master_seed,
                          {static_cast<std::uint64_t>(m),
                           static_cast<std::uint64_t>(StreamPurpose::SeedPool),
                           static_cast<std::uint64_t>(r)});
  }

  RunManifest manifest;
  manifest.master_seed = cfg_.master_seed;
  manifest.result_window = m;
  manifest.parallelism = cfg_.parallelism;
  manifest.tasks.resize(total);
  WindowResult result;
  result.window = m;
  result.day_begin = a;
  result.day_end = b;
  result.particles.resize(total);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < reps; ++r) {
      const std::uint32_t id = static_cast<std::uint32_t>(i * reps + r);
      ParticleRecord& rec = result.particles[id];
      rec.id = id;
      rec.theta = prop.pairs[i].theta;
      rec.rho = prop.pairs[i].rho;
      rec.sim_seed = pool[r];
      rec.ancestor = m == 1 ? id : prop.ancestors[i];
      SimTask& task = manifest.tasks[id];
      task.particle = id;
      task.advance_to = b;
      if (m == 1) {
        task.population = cfg_.population;
        task.initial_exposed = cfg_.initial_exposed;
        task.params = cfg_.base_params;
        task.params.transmission_rate = rec.theta;
        task.seed = rec.sim_seed;
      } else {
        task.restore_from = CheckpointKey{m - 1, rec.ancestor};
        task.overrides.seed = rec.sim_seed;
        task.overrides.transmission_rate = rec.theta;
      }
    }
  }

  std::vector<TaskOutcome> outcomes = execute(manifest, store_);
  std::string sim_errors;
  for (std::size_t i = 0; i < total; ++i) {
    if (!outcomes[i].ok) {
      if (!sim_errors.empty()) sim_errors += "; ";
      sim_errors += "particle " + std::to_string(i) + ": " + outcomes[i].error;
    }
  }
  if (!sim_errors.empty()) {
    throw std::runtime_error("window " + std::to_string(m) +
                             " simulation failures: " + sim_errors);
  }

  // Weight every candidate on the window slice.
  const std::size_t slice_len = static_cast<std::size_t>(b - wa + 1);
  const std::span<const std::int64_t> obs_cases(obs.reported_cases.data() + wa, slice_len);
  std::span<const std::int64_t> obs_deaths;
  if (plan.use_deaths) obs_deaths = std::span(obs.deaths.data() + wa, slice_len);

  std::vector<std::vector<std::int64_t>> thinned(total);
  std::vector<double> log_w(total, kNegInf);
  for (std::size_t i = 0; i < total; ++i) {
    ParticleRecord& rec = result.particles[i];
    const std::vector<std::int64_t> cases = outcomes[i].trajectory.detected_cases();
    const std::vector<std::int64_t> true_cov(cases.begin() + a, cases.begin() + b + 1);
    const std::uint64_t thin_seed =
        derive_seed(cfg_.master_seed,
                    {static_cast<std::uint64_t>(m),
                     static_cast<std::uint64_t>(StreamPurpose::Thinning),
                     static_cast<std::uint64_t>(rec.id)});
    thinned[i] = thin_series(true_cov, rec.rho, thin_seed);
    const std::span<const std::int64_t> sim_cases(thinned[i].data() + (wa - a), slice_len);
    double lw = window_log_likelihood(obs_cases, sim_cases, plan.cases_like);
    if (plan.use_deaths) {
      const std::vector<std::int64_t> deaths = outcomes[i].trajectory.deaths();
      const std::span<const std::int64_t> sim_deaths(deaths.data() + wa, slice_len);
      lw += window_log_likelihood(obs_deaths, sim_deaths, plan.deaths_like);
    }
    log_w[i] = lw;
    rec.log_weight = lw;
  }

  try {
    result.norm_weights = normalize_log_weights(log_w);
  } catch (const DegenerateWeightsError&) {
    throw DegenerateWeightsError("window " + std::to_string(m) + ": all " +
                                 std::to_string(total) + " candidate weights are zero");
  }
  result.ess = effective_sample_size(result.norm_weights);

  Rng resample_rng(derive_seed(cfg_.master_seed,
                               {static_cast<std::uint64_t>(m),
                                static_cast<std::uint64_t>(StreamPurpose::Resample)}));
  result.resampled =
      plan.systematic
          ? systematic_resample(result.norm_weights, static_cast<std::size_t>(plan.resample_size),
                                resample_rng)
          : multinomial_resample(result.norm_weights, static_cast<std::size_t>(plan.resample_size),
                                 resample_rng);
  for (std::uint32_t cand : result.resampled) ++result.particles[cand].resampled_count;

  // Retain coverage slices (and, on the final window, full-horizon series)
  // for the distinct survivors; everything else can be dropped.
  std::set<std::uint32_t> distinct(result.resampled.begin(), result.resampled.end());
  kept_reported_.emplace_back();
  for (std::uint32_t cand : distinct) kept_reported_.back()[cand] = thinned[cand];
  if (m == plan.windows()) {
    for (std::uint32_t cand : distinct) {
      final_true_[cand] = outcomes[cand].trajectory.detected_cases();
      final_deaths_[cand] = outcomes[cand].trajectory.deaths();
    }
  }

  windows_.push_back(std::move(result));
  dump_window_csv(windows_.back());

  std::set<CheckpointKey> keep;
  for (std::uint32_t cand : distinct) keep.insert(CheckpointKey{m, cand});
  store_.gc(keep);
  return windows_.back();
}

SequentialResult SisEngine::run_all(const Observations& obs) {
  for (int m = 1; m <= cfg_.plan.windows(); ++m) run_window(m, obs);
  SequentialResult out;
  out.windows = windows_;
  out.survivors = stitch();
  return out;
}

SurvivorBundle SisEngine::stitch() const {
  const WindowPlan& plan = cfg_.plan;
  const int M = plan.windows();
  const int horizon = plan.coverage_end(M);
  const WindowResult& last = windows_.back();
  const std::size_t k = last.resampled.size();

  SurvivorBundle bundle;
  bundle.reported.resize(k);
  bundle.true_cases.resize(k);
  bundle.deaths.resize(k);
  bundle.params_by_window.resize(k);
  for (std::size_t slot = 0; slot < k; ++slot) {
    // Walk the ancestry chain from the final survivor back to window 1.
    std::vector<std::uint32_t> chain(static_cast<std::size_t>(M));
    chain[static_cast<std::size_t>(M - 1)] = last.resampled[slot];
    for (int m = M - 1; m >= 1; --m) {
      const ParticleRecord& rec =
          windows_[static_cast<std::size_t>(m)].particles[chain[static_cast<std::size_t>(m)]];
      chain[static_cast<std::size_t>(m - 1)] = rec.ancestor;
    }

    std::vector<std::int64_t> reported(static_cast<std::size_t>(horizon) + 1, 0);
    std::vector<ParamPair> params(static_cast<std::size_t>(M));
    for (int m = 1; m <= M; ++m) {
      const std::uint32_t cand = chain[static_cast<std::size_t>(m - 1)];
      const ParticleRecord& rec =
          windows_[static_cast<std::size_t>(m - 1)].particles[cand];
      params[static_cast<std::size_t>(m - 1)] = {rec.theta, rec.rho};
      const auto& slice = kept_reported_[static_cast<std::size_t>(m - 1)].at(cand);
      const int begin = plan.coverage_begin(m);
      std::copy(slice.begin(), slice.end(), reported.begin() + begin);
    }
    bundle.reported[slot] = std::move(reported);
    bundle.true_cases[slot] = final_true_.at(last.resampled[slot]);
    bundle.deaths[slot] = final_deaths_.at(last.resampled[slot]);
    bundle.params_by_window[slot] = std::move(params);
  }
  return bundle;
}

void SisEngine::dump_window_csv(const WindowResult& result) const {
  if (dump_dir_.empty()) return;
  const std::filesystem::path path =
      dump_dir_ / ("posterior_window_" + std::to_string(result.window) + ".csv");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << "particle_id,ancestor_id,theta,rho,seed,log_weight,resampled_count\n";
    for (const ParticleRecord& rec : result.particles) {
      out << rec.id << ',' << rec.ancestor << ',' << fmt17(rec.theta) << ',' << fmt17(rec.rho)
          << ',' << rec.sim_seed << ',' << fmt17(rec.log_weight) << ',' << rec.resampled_count
          << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace epi
