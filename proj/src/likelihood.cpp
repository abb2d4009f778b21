#include "epi/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace epi {

double window_log_likelihood(std::span<const std::int64_t> obs,
                             std::span<const std::int64_t> sim_obs,
                             const LikelihoodSpec& spec) {
  if (obs.size() != sim_obs.size())
    throw std::invalid_argument("window_log_likelihood: slice length mismatch");
  if (obs.empty()) throw std::invalid_argument("window_log_likelihood: empty slice");
  if (!spec.sigma_by_day.empty() && spec.sigma_by_day.size() != obs.size())
    throw std::invalid_argument("window_log_likelihood: sigma vector length mismatch");
  constexpr double log_two_pi = 1.8378770664093454836;  // log(2*pi)
  double total = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] < 0 || sim_obs[i] < 0)
      throw std::invalid_argument("window_log_likelihood: negative count");
    const double sigma = spec.sigma_at(i);
    if (!(sigma > 0.0)) throw std::invalid_argument("window_log_likelihood: sigma must be positive");
    const double resid =
        std::sqrt(static_cast<double>(obs[i])) - std::sqrt(static_cast<double>(sim_obs[i]));
    total += -0.5 * (log_two_pi + 2.0 * std::log(sigma)) - resid * resid / (2.0 * sigma * sigma);
  }
  return total;
}

double joint_log_likelihood(std::span<const std::int64_t> obs_cases,
                            std::span<const std::int64_t> sim_obs_cases,
                            const LikelihoodSpec& spec_cases,
                            std::span<const std::int64_t> obs_deaths,
                            std::span<const std::int64_t> sim_deaths,
                            const LikelihoodSpec& spec_deaths) {
  double total = window_log_likelihood(obs_cases, sim_obs_cases, spec_cases);
  if (!obs_deaths.empty() || !sim_deaths.empty())
    total += window_log_likelihood(obs_deaths, sim_deaths, spec_deaths);
  return total;
}

}  // namespace epi
