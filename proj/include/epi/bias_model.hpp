#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace epi {

// Reporting bias: each true count is thinned to Binomial(true, rho),
// independently across days. rho must lie in (0, 1]; rho = 1 is the identity
// path used for testing.
std::vector<std::int64_t> thin_series(std::span<const std::int64_t> true_counts,
                                      double rho, std::uint64_t seed);

// Exact log Binomial(trials, rho) pmf at `observed`, via log-gamma.
// observed > trials yields -infinity (impossible event, not an error).
double thinning_log_pmf(std::int64_t observed, std::int64_t trials, double rho);

}  // namespace epi
