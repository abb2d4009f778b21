#include "epi/bias_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "epi/rng.hpp"

namespace epi {

std::vector<std::int64_t> thin_series(std::span<const std::int64_t> true_counts,
                                      double rho, std::uint64_t seed) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw std::invalid_argument("thin_series: rho must lie in (0, 1]");
  Rng rng(seed);
  std::vector<std::int64_t> out;
  out.reserve(true_counts.size());
  for (std::int64_t n : true_counts) {
    if (n < 0) throw std::invalid_argument("thin_series: negative true count");
    out.push_back(rho == 1.0 ? n : binomial_draw(rng, n, rho));
  }
  return out;
}

double thinning_log_pmf(std::int64_t observed, std::int64_t trials, double rho) {
  if (trials < 0 || observed < 0)
    throw std::invalid_argument("thinning_log_pmf: counts must be nonnegative");
  if (!(rho > 0.0 && rho <= 1.0))
    throw std::invalid_argument("thinning_log_pmf: rho must lie in (0, 1]");
  if (observed > trials) return -std::numeric_limits<double>::infinity();
  if (rho == 1.0)
    return observed == trials ? 0.0 : -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(trials);
  const double k = static_cast<double>(observed);
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(rho) + (n - k) * std::log1p(-rho);
}

}  // namespace epi
