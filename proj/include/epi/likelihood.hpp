#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace epi {

// Gaussian observation error on square-root transformed counts with diagonal
// covariance. sigma applies to every day unless a per-day vector is given.
struct LikelihoodSpec {
  double sigma = 1.0;
  std::vector<double> sigma_by_day;  // optional; same length as the slice

  double sigma_at(std::size_t i) const {
    return sigma_by_day.empty() ? sigma : sigma_by_day[i];
  }
};

// Sum over the slice of log N(sqrt(obs_t) | sqrt(sim_t), sigma_t^2).
double window_log_likelihood(std::span<const std::int64_t> obs,
                             std::span<const std::int64_t> sim_obs,
                             const LikelihoodSpec& spec);

// Cases term plus (when a death series is present) the death term. Deaths are
// compared raw: no reporting bias is assumed on death counts.
double joint_log_likelihood(std::span<const std::int64_t> obs_cases,
                            std::span<const std::int64_t> sim_obs_cases,
                            const LikelihoodSpec& spec_cases,
                            std::span<const std::int64_t> obs_deaths,
                            std::span<const std::int64_t> sim_deaths,
                            const LikelihoodSpec& spec_deaths);

}  // namespace epi
