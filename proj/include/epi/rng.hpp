// Deterministic random number generation: a serializable xoshiro256** stream,
// splitmix64-based stream derivation, and the exact discrete samplers used by
// the simulator (binomial, categorical tables, beta).
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace epi {

// One splitmix64 step: advances the state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Order-sensitive combiner for deriving independent stream seeds from a
// master seed and a list of tags, e.g. (window, particle id, purpose).
std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> tags);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

// Purpose tags used throughout the calibration pipeline so that every random
// stream is a pure function of (master seed, window, particle, purpose).
enum class StreamPurpose : std::uint64_t {
  Prior = 1,
  Jitter = 2,
  Resample = 3,
  Thinning = 4,
  SeedPool = 5,
  Truth = 6,
};

// xoshiro256**; 256-bit state, serializes into checkpoints verbatim.
class Rng {
 public:
  Rng() : state_{1, 2, 3, 4} {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  const std::array<std::uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  std::array<std::uint64_t, 4> state_;
};

// Exact Binomial(n, p) sample. Uses pmf inversion for small n*p and halves n
// recursively otherwise, so no intermediate quantity underflows.
std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p);

// Beta(alpha, beta) sample by inverse-CDF; intended for prior draws, not hot
// loops.
double beta_draw(Rng& rng, double alpha, double beta);

// Discrete distribution over durations 1..size() used for sojourn times.
// Built once per parameter set; sampling is a binary search on the CDF.
class DiscreteTable {
 public:
  DiscreteTable() = default;
  explicit DiscreteTable(std::vector<double> pmf);  // pmf[i] = P(value == i+1)

  int draw(Rng& rng) const;

  // Splits a cohort of `count` draws into per-value counts (exact multinomial
  // via conditional binomials). Calls `sink(value, n)` for nonzero buckets in
  // increasing value order.
  template <typename Sink>
  void split(Rng& rng, std::int64_t count, Sink&& sink) const {
    std::int64_t remaining = count;
    double mass = 1.0;
    for (std::size_t i = 0; i + 1 < pmf_.size() && remaining > 0; ++i) {
      double p = mass > 0.0 ? std::min(1.0, pmf_[i] / mass) : 1.0;
      std::int64_t k = binomial_draw(rng, remaining, p);
      if (k > 0) sink(static_cast<int>(i) + 1, k);
      remaining -= k;
      mass -= pmf_[i];
      if (mass <= 0.0) mass = 0.0;
    }
    if (remaining > 0) sink(static_cast<int>(pmf_.size()), remaining);
  }

  std::size_t size() const { return pmf_.size(); }
  double pmf(std::size_t value) const { return pmf_[value - 1]; }  // value in 1..size()
  double mean() const;

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

// Discretized gamma sojourn distribution: bucket d >= 1 takes the gamma mass
// on (d-0.5, d+0.5], with the head folded into d=1 and the tail into the last
// bucket covering all but 1e-12 of the mass.
DiscreteTable discretized_gamma(double mean, double shape);

}  // namespace epi
