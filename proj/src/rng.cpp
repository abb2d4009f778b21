#include "epi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace epi {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> tags) {
  std::uint64_t x = master;
  (void)splitmix64(x);
  for (std::uint64_t t : tags) {
    x ^= t + 0x9E3779B97F4A7C15ULL + (x << 6) + (x >> 2);
    (void)splitmix64(x);
  }
  return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return derive_seed(master, std::span<const std::uint64_t>(tags.begin(), tags.size()));
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& w : state_) w = splitmix64(x);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection to remove modulo bias.
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

// Inversion along the pmf; valid while n*p stays small enough that (1-p)^n
// does not underflow (callers guarantee n*p <= 30, p <= 0.5).
static std::int64_t binomial_inversion(Rng& rng, std::int64_t n, double p) {
  const double q_ratio = p / (1.0 - p);
  double f = std::exp(static_cast<double>(n) * std::log1p(-p));
  double u = rng.uniform();
  std::int64_t k = 0;
  while (u > f && k < n) {
    u -= f;
    ++k;
    f *= q_ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    if (f <= 0.0) break;  // tail mass exhausted by rounding
  }
  return k;
}

std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p) {
  if (n < 0) throw std::invalid_argument("binomial_draw: n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_draw: p outside [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial_draw(rng, n, 1.0 - p);
  // Halve n until each leaf satisfies the inversion precondition, then sum
  // the independent leaf draws.
  std::int64_t total = 0;
  std::vector<std::int64_t> stack{n};
  while (!stack.empty()) {
    std::int64_t m = stack.back();
    stack.pop_back();
    if (static_cast<double>(m) * p > 30.0) {
      stack.push_back(m / 2);
      stack.push_back(m - m / 2);
    } else {
      total += binomial_inversion(rng, m, p);
    }
  }
  return total;
}

double beta_draw(Rng& rng, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("beta_draw: shape parameters must be positive");
  double u = rng.uniform();
  if (u <= 0.0) u = 0x1.0p-53;
  return boost::math::ibeta_inv(alpha, beta, u);
}

DiscreteTable::DiscreteTable(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw std::invalid_argument("DiscreteTable: empty pmf");
  double total = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0)) throw std::invalid_argument("DiscreteTable: negative mass");
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("DiscreteTable: zero total mass");
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    pmf_[i] /= total;
    acc += pmf_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

int DiscreteTable::draw(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(it - cdf_.begin()) + 1;
}

double DiscreteTable::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) m += pmf_[i] * static_cast<double>(i + 1);
  return m;
}

DiscreteTable discretized_gamma(double mean, double shape) {
  if (!(mean > 0.0)) throw std::invalid_argument("discretized_gamma: mean must be positive");
  if (!(shape > 0.0)) throw std::invalid_argument("discretized_gamma: shape must be positive");
  const double scale = mean / shape;
  constexpr int kMaxDays = 365;
  std::vector<double> pmf;
  double below = boost::math::gamma_p(shape, 1.5 / scale);  // head folded into d=1
  pmf.push_back(below);
  for (int d = 2; d <= kMaxDays; ++d) {
    const double upto = boost::math::gamma_p(shape, (d + 0.5) / scale);
    pmf.push_back(upto - below);
    below = upto;
    if (1.0 - upto < 1e-12 && d >= static_cast<int>(mean)) break;
  }
  pmf.back() += std::max(0.0, 1.0 - below);  // absorb the truncated tail
  return DiscreteTable(std::move(pmf));
}

}  // namespace epi
