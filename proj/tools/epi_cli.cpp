// Command-line front end: truth generation, calibration, summaries, checks.
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "epi/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

epi::ConfigFile load_config(CommonArgs& args) {
  epi::ConfigFile file = epi::ConfigFile::parse_file(args.config_path);
  if (args.seed_given) file.set("run", "seed", std::to_string(args.seed));
  return file;
}

void apply_scale(epi::ExperimentConfig& cfg, epi::ConfigFile& echo, const std::string& scale) {
  if (scale.empty()) return;
  if (scale == "desk") {
    cfg.plan.pairs = 1000;
    cfg.plan.replicates = 10;
    cfg.plan.resample_size = 1000;
  } else if (scale == "paper") {
    cfg.plan.pairs = 25000;
    cfg.plan.replicates = 20;
    cfg.plan.resample_size = 10000;
  } else {
    throw epi::ConfigError("unknown scale '" + scale + "' (expected desk or paper)");
  }
  echo.set("calibration", "pairs", std::to_string(cfg.plan.pairs));
  echo.set("calibration", "replicates", std::to_string(cfg.plan.replicates));
  echo.set("calibration", "resample_size", std::to_string(cfg.plan.resample_size));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Windowed sequential importance sampling for a stochastic SEIR simulator"};
  app.require_subcommand(1);

  CommonArgs truth_args, calib_args, verify_args;
  std::string summarize_dir;
  std::string targets = "cases";
  std::string scale;

  CLI::App* truth = app.add_subcommand("truth", "Generate the synthetic surveillance stream");
  truth->add_option("--config", truth_args.config_path, "experiment config file")->required();
  truth->add_option("--out", truth_args.out_dir, "output directory")->required();
  truth->add_option("--seed", truth_args.seed, "master seed override")
      ->each([&](const std::string&) { truth_args.seed_given = true; });

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Run the windowed calibration against synthetic truth");
  calibrate->add_option("--config", calib_args.config_path, "experiment config file")->required();
  calibrate->add_option("--out", calib_args.out_dir, "output directory")->required();
  calibrate->add_option("--seed", calib_args.seed, "master seed override")
      ->each([&](const std::string&) { calib_args.seed_given = true; });
  calibrate->add_option("--targets", targets, "observation targets: cases or cases+deaths")
      ->check(CLI::IsMember({"cases", "cases+deaths"}));
  calibrate->add_option("--scale", scale, "budget preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));

  CLI::App* summarize =
      app.add_subcommand("summarize", "Recompute ribbons.csv from trajectories.csv");
  summarize->add_option("--out", summarize_dir, "calibration output directory")->required();

  CLI::App* verify = app.add_subcommand("verify", "Check posterior intervals against the truth");
  verify->add_option("--config", verify_args.config_path, "experiment config file")->required();
  verify->add_option("--out", verify_args.out_dir, "calibration output directory")->required();
  verify->add_option("--seed", verify_args.seed, "master seed override")
      ->each([&](const std::string&) { verify_args.seed_given = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (truth->parsed()) {
      epi::ConfigFile file = load_config(truth_args);
      const epi::ExperimentConfig cfg = epi::ExperimentConfig::from_config(file);
      const epi::GroundTruth gt = epi::generate_ground_truth(cfg);
      std::filesystem::create_directories(truth_args.out_dir);
      epi::write_truth_csv(gt, std::filesystem::path(truth_args.out_dir) / "ground_truth.csv",
                           false);
      epi::write_truth_csv(gt, std::filesystem::path(truth_args.out_dir) / "truth_hidden.csv",
                           true);
      std::cout << "wrote ground_truth.csv and truth_hidden.csv to " << truth_args.out_dir
                << "\n";
    } else if (calibrate->parsed()) {
      epi::ConfigFile file = load_config(calib_args);
      epi::ExperimentConfig cfg = epi::ExperimentConfig::from_config(file);
      apply_scale(cfg, file, scale);
      cfg.validate();
      const epi::CalibrationOutput out =
          epi::calibrate(cfg, file, targets, calib_args.out_dir);
      for (const epi::WindowResult& w : out.result.windows) {
        std::cout << "window " << w.window << " days [" << w.day_begin << ", " << w.day_end
                  << "] candidates " << w.particles.size() << " ess "
                  << static_cast<long long>(w.ess) << "\n";
      }
      std::cout << "outputs written to " << calib_args.out_dir << "\n";
    } else if (summarize->parsed()) {
      epi::summarize_directory(summarize_dir);
      std::cout << "ribbons.csv rebuilt in " << summarize_dir << "\n";
    } else if (verify->parsed()) {
      epi::ConfigFile file = load_config(verify_args);
      const epi::ExperimentConfig cfg = epi::ExperimentConfig::from_config(file);
      const epi::VerifyReport report = epi::verify_run(cfg, verify_args.out_dir);
      std::cout << epi::verify_text(report);
      const std::size_t n = report.windows.size();
      if (report.theta_covered_count < static_cast<int>(n) ||
          report.rho_covered_count < static_cast<int>(n)) {
        return 2;
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
