// Experiment drivers: synthetic truth, calibration runs, summaries, checks.
#include "epi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "epi/rng.hpp"
#include "epi/seir_model.hpp"

namespace epi {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

void remove_outputs(const std::filesystem::path& out_dir) {
  std::error_code ec;
  for (const char* name : {"ground_truth.csv", "trajectories.csv", "ribbons.csv",
                           "manifest.json", "verification.txt"}) {
    std::filesystem::remove(out_dir / name, ec);
  }
  if (std::filesystem::exists(out_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
      const std::string stem = entry.path().filename().string();
      if (stem.starts_with("posterior_window_") && stem.ends_with(".csv")) {
        std::filesystem::remove(entry.path(), ec);
      }
    }
  }
}

}  // namespace

GroundTruth generate_ground_truth(const ExperimentConfig& cfg) {
  SimParams params = cfg.params;
  params.transmission_rate = cfg.theta_schedule.front().second;
  const std::uint64_t sim_seed =
      derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(StreamPurpose::Truth), 0});
  SeirModel model(cfg.population, cfg.initial_exposed, params, sim_seed);

  // Regime changes enter through the same checkpoint-restore path the
  // calibration uses: run to the eve of each breakpoint, restore with the new
  // transmission rate, continue.
  for (std::size_t i = 1; i < cfg.theta_schedule.size(); ++i) {
    const auto [day, theta] = cfg.theta_schedule[i];
    if (day > cfg.horizon) break;
    model.advance(day - 1);
    RestoreOverrides overrides;
    overrides.transmission_rate = theta;
    model = SeirModel::restore(model.save_checkpoint(), overrides);
  }
  model.advance(cfg.horizon);

  GroundTruth truth;
  truth.true_cases = model.trajectory().detected_cases();
  truth.deaths = model.trajectory().deaths();
  truth.reported_cases.resize(truth.true_cases.size());
  Rng thin_rng(
      derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(StreamPurpose::Truth), 1}));
  for (std::size_t d = 0; d < truth.true_cases.size(); ++d) {
    const double rho = schedule_value(cfg.rho_schedule, static_cast<int>(d));
    truth.reported_cases[d] =
        rho >= 1.0 ? truth.true_cases[d] : binomial_draw(thin_rng, truth.true_cases[d], rho);
  }
  return truth;
}

std::vector<double> quantiles(std::vector<double> values, std::span<const double> ps) {
  if (values.empty()) throw std::invalid_argument("quantiles of an empty sample");
  std::sort(values.begin(), values.end());
  std::vector<double> out(ps.size());
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double p = ps[i];
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile probability outside [0, 1]");
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    const double a = values[lo];
    const double b = values[std::min(lo + 1, n - 1)];
    out[i] = a + (b - a) * frac;
  }
  return out;
}

std::vector<RibbonRow> summarize(const SurvivorBundle& survivors) {
  if (survivors.reported.empty()) throw std::invalid_argument("summarize: empty survivor cloud");
  const std::size_t days = survivors.reported.front().size();
  static constexpr double kPs[] = {0.05, 0.25, 0.5, 0.75, 0.95};
  std::vector<RibbonRow> rows;
  rows.reserve(days * 3);
  const std::vector<std::vector<std::int64_t>>* series_sets[] = {
      &survivors.reported, &survivors.true_cases, &survivors.deaths};
  const char* names[] = {"reported_cases", "true_cases", "deaths"};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t d = 0; d < days; ++d) {
      std::vector<double> sample;
      sample.reserve(series_sets[s]->size());
      for (const auto& series : *series_sets[s]) {
        if (series.size() != days) throw std::invalid_argument("summarize: ragged series");
        sample.push_back(static_cast<double>(series[d]));
      }
      const std::vector<double> q = quantiles(std::move(sample), kPs);
      rows.push_back({static_cast<int>(d), names[s], q[0], q[1], q[2], q[3], q[4]});
    }
  }
  return rows;
}

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path,
                     bool include_hidden) {
  std::ostringstream out;
  out << (include_hidden ? "day,reported_cases,deaths,true_cases\n"
                         : "day,reported_cases,deaths\n");
  for (std::size_t d = 0; d < truth.reported_cases.size(); ++d) {
    out << d << ',' << truth.reported_cases[d] << ',' << truth.deaths[d];
    if (include_hidden) out << ',' << truth.true_cases[d];
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

namespace {

void write_trajectories_csv(const SurvivorBundle& survivors,
                            const std::filesystem::path& path) {
  std::ostringstream out;
  out << "slot,day,reported_cases,true_cases,deaths\n";
  for (std::size_t k = 0; k < survivors.reported.size(); ++k) {
    for (std::size_t d = 0; d < survivors.reported[k].size(); ++d) {
      out << k << ',' << d << ',' << survivors.reported[k][d] << ','
          << survivors.true_cases[k][d] << ',' << survivors.deaths[k][d] << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

void write_ribbons_csv(const std::vector<RibbonRow>& rows, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "day,series,q05,q25,q50,q75,q95\n";
  for (const RibbonRow& r : rows) {
    out << r.day << ',' << r.series << ',' << fmt17(r.q05) << ',' << fmt17(r.q25) << ','
        << fmt17(r.q50) << ',' << fmt17(r.q75) << ',' << fmt17(r.q95) << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace

CalibrationOutput calibrate(const ExperimentConfig& cfg, const ConfigFile& echo,
                            const std::string& targets, const std::filesystem::path& out_dir) {
  if (targets != "cases" && targets != "cases+deaths") {
    throw std::invalid_argument("targets must be 'cases' or 'cases+deaths'");
  }
  std::filesystem::create_directories(out_dir);
  try {
    CalibrationOutput output;
    output.truth = generate_ground_truth(cfg);
    Observations obs;
    obs.reported_cases = output.truth.reported_cases;
    obs.deaths = output.truth.deaths;

    SisConfig sis;
    sis.population = cfg.population;
    sis.initial_exposed = cfg.initial_exposed;
    sis.base_params = cfg.params;
    sis.plan = cfg.plan;
    sis.plan.use_deaths = targets == "cases+deaths";
    sis.master_seed = cfg.master_seed;
    sis.parallelism = cfg.parallelism;

    CheckpointStore store(out_dir / "checkpoints");
    SisEngine engine(sis, store, out_dir);
    output.result = engine.run_all(obs);

    write_truth_csv(output.truth, out_dir / "ground_truth.csv", false);
    write_trajectories_csv(output.result.survivors, out_dir / "trajectories.csv");
    write_ribbons_csv(summarize(output.result.survivors), out_dir / "ribbons.csv");

    nlohmann::json manifest;
    manifest["format"] = "epi-calibration-v1";
    manifest["master_seed"] = cfg.master_seed;
    manifest["targets"] = targets;
    manifest["config"] = echo.sections();
    nlohmann::json windows = nlohmann::json::array();
    for (const WindowResult& w : output.result.windows) {
      nlohmann::json entry;
      entry["window"] = w.window;
      entry["day_begin"] = w.day_begin;
      entry["day_end"] = w.day_end;
      entry["candidates"] = w.particles.size();
      entry["resample_size"] = w.resampled.size();
      entry["ess"] = w.ess;
      windows.push_back(entry);
    }
    manifest["windows"] = windows;
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return output;
  } catch (...) {
    remove_outputs(out_dir);
    throw;
  }
}

void summarize_directory(const std::filesystem::path& out_dir) {
  const std::filesystem::path traj_path = out_dir / "trajectories.csv";
  std::ifstream in(traj_path);
  if (!in) throw std::runtime_error("cannot open " + traj_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "slot,day,reported_cases,true_cases,deaths") {
    throw std::runtime_error(traj_path.string() + ": unexpected header");
  }
  SurvivorBundle survivors;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 5) throw std::runtime_error(traj_path.string() + ": malformed row");
    const std::size_t slot = std::stoul(f[0]);
    if (slot >= survivors.reported.size()) {
      survivors.reported.resize(slot + 1);
      survivors.true_cases.resize(slot + 1);
      survivors.deaths.resize(slot + 1);
    }
    survivors.reported[slot].push_back(std::stoll(f[2]));
    survivors.true_cases[slot].push_back(std::stoll(f[3]));
    survivors.deaths[slot].push_back(std::stoll(f[4]));
  }
  if (survivors.reported.empty()) {
    throw std::runtime_error(traj_path.string() + ": no survivor rows");
  }
  write_ribbons_csv(summarize(survivors), out_dir / "ribbons.csv");
}

namespace {

struct PosteriorColumn {
  std::vector<double> theta, rho, log_weight;
};

PosteriorColumn read_posterior_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "particle_id,ancestor_id,theta,rho,seed,log_weight,resampled_count") {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  PosteriorColumn cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 7) throw std::runtime_error(path.string() + ": malformed row");
    cols.theta.push_back(std::stod(f[2]));
    cols.rho.push_back(std::stod(f[3]));
    cols.log_weight.push_back(std::stod(f[5]));
  }
  if (cols.theta.empty()) throw std::runtime_error(path.string() + ": no particle rows");
  return cols;
}

}  // namespace

std::pair<double, double> weighted_interval(std::span<const double> values,
                                            std::span<const double> weights, double lo_p,
                                            double hi_p) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double cum = 0.0;
  double lo = values[order.front()];
  double hi = values[order.back()];
  bool lo_set = false;
  for (std::size_t i : order) {
    cum += weights[i];
    if (!lo_set && cum >= lo_p) {
      lo = values[i];
      lo_set = true;
    }
    if (cum >= hi_p) {
      hi = values[i];
      break;
    }
  }
  return {lo, hi};
}

VerifyReport verify_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  VerifyReport report;
  for (int m = 1; m <= cfg.plan.windows(); ++m) {
    const std::filesystem::path path =
        out_dir / ("posterior_window_" + std::to_string(m) + ".csv");
    const PosteriorColumn cols = read_posterior_csv(path);
    const std::vector<double> w = normalize_log_weights(cols.log_weight);

    WindowVerify wv;
    wv.window = m;
    std::tie(wv.theta_lo, wv.theta_hi) = weighted_interval(cols.theta, w, 0.05, 0.95);
    std::tie(wv.rho_lo, wv.rho_hi) = weighted_interval(cols.rho, w, 0.05, 0.95);
    const int probe_day = cfg.plan.coverage_end(m);
    wv.theta_truth = schedule_value(cfg.theta_schedule, probe_day);
    wv.rho_truth = schedule_value(cfg.rho_schedule, probe_day);
    wv.theta_covered = wv.theta_lo <= wv.theta_truth && wv.theta_truth <= wv.theta_hi;
    wv.rho_covered = wv.rho_lo <= wv.rho_truth && wv.rho_truth <= wv.rho_hi;
    report.theta_covered_count += wv.theta_covered ? 1 : 0;
    report.rho_covered_count += wv.rho_covered ? 1 : 0;
    report.windows.push_back(wv);
  }
  write_file_atomic(out_dir / "verification.txt", verify_text(report));
  return report;
}

std::string verify_text(const VerifyReport& report) {
  std::ostringstream out;
  for (const WindowVerify& w : report.windows) {
    out << "window " << w.window << " theta: interval [" << fmt17(w.theta_lo) << ", "
        << fmt17(w.theta_hi) << "] truth " << fmt17(w.theta_truth) << " -> "
        << (w.theta_covered ? "covered" : "MISSED") << '\n';
    out << "window " << w.window << " rho:   interval [" << fmt17(w.rho_lo) << ", "
        << fmt17(w.rho_hi) << "] truth " << fmt17(w.rho_truth) << " -> "
        << (w.rho_covered ? "covered" : "MISSED") << '\n';
  }
  out << "theta coverage: " << report.theta_covered_count << "/" << report.windows.size()
      << '\n';
  out << "rho coverage:   " << report.rho_covered_count << "/" << report.windows.size() << '\n';
  return out.str();
}

}  // namespace epi
