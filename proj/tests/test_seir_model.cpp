#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "epi/rng.hpp"
#include "epi/seir_model.hpp"

using namespace epi;

namespace {

// Random-but-valid parameter set for property tests.
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

std::int64_t census_total(const DayRecord& rec) {
  std::int64_t total = 0;
  for (std::uint32_t c : rec.census) total += c;
  return total;
}

}  // namespace

TEST_CASE("population is conserved and counters stay sane on random configs") {
  Rng meta(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t population = 500 + static_cast<std::int64_t>(meta.uniform_index(20000));
    const std::int64_t exposed = 1 + static_cast<std::int64_t>(meta.uniform_index(20));
    SeirModel model(population, exposed, random_params(meta), meta.next());
    model.advance(40);
    const Trajectory& traj = model.trajectory();
    REQUIRE(traj.days.size() == 41);
    std::uint32_t prev_d = 0, prev_r = 0;
    for (const DayRecord& rec : traj.days) {
      CHECK(census_total(rec) == population);
      CHECK(rec.new_detected_cases >= 0);
      CHECK(rec.new_deaths >= 0);
      const std::uint32_t d = rec.census[static_cast<std::size_t>(Compartment::D)];
      const std::uint32_t r = rec.census[static_cast<std::size_t>(Compartment::R)];
      CHECK(d >= prev_d);  // absorbing states never drain
      CHECK(r >= prev_r);
      prev_d = d;
      prev_r = r;
    }
    CHECK(model.occupancy_sum() == population);
  }
}

TEST_CASE("theta = 0 means no transmission beyond the seeded cohort") {
  SimParams p;
  p.transmission_rate = 0.0;
  SeirModel model(5000, 12, p, 99);
  model.advance(80);
  const Trajectory& traj = model.trajectory();
  // Susceptibles never move, so the non-S compartments always hold exactly
  // the seeded 12 between them.
  for (const DayRecord& rec : traj.days) {
    CHECK(rec.census[static_cast<std::size_t>(Compartment::S)] == 5000 - 12);
  }
}

TEST_CASE("forced detection counts every seeded individual exactly once") {
  SimParams p;
  p.transmission_rate = 0.0;
  p.detect_prob_a = 1.0;
  p.detect_prob_p = 1.0;
  p.detect_prob_sm = 1.0;
  p.detect_prob_ss = 1.0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SeirModel model(1000, 10, p, seed);
    model.advance(120);
    std::int64_t detected = 0;
    for (const auto& rec : model.trajectory().days) detected += rec.new_detected_cases;
    CHECK(detected == 10);
  }
}

TEST_CASE("zero detection probability never produces a case") {
  SimParams p;
  p.detect_prob_a = 0.0;
  p.detect_prob_p = 0.0;
  p.detect_prob_sm = 0.0;
  p.detect_prob_ss = 0.0;
  SeirModel model(20000, 10, p, 4);
  model.advance(60);
  std::int64_t detected = 0;
  for (const auto& rec : model.trajectory().days) detected += rec.new_detected_cases;
  CHECK(detected == 0);
}

TEST_CASE("detection happens exactly delay days after entering an infectious state") {
  SimParams p;
  p.transmission_rate = 0.0;
  p.detect_prob_a = 1.0;
  p.detect_prob_p = 1.0;
  p.detect_prob_sm = 1.0;
  p.detect_prob_ss = 1.0;
  p.detection_delay_days = 2;
  p.sojourn_e = {1.0, 400.0};   // leaves E after exactly one day
  p.sojourn_p = {10.0, 400.0};  // long enough that the delay always elapses
  p.sojourn_a = {10.0, 400.0};
  SeirModel model(100, 5, p, 17);
  model.advance(4);
  const auto& days = model.trajectory().days;
  CHECK(days[0].new_detected_cases == 0);
  CHECK(days[1].new_detected_cases == 0);  // enter P/A on day 1
  CHECK(days[2].new_detected_cases == 0);
  CHECK(days[3].new_detected_cases == 5);  // detected on day 1 + 2
  CHECK(days[4].new_detected_cases == 0);
}

TEST_CASE("same seed reproduces the trajectory, different seed diverges") {
  SimParams p;
  SeirModel a(30000, 10, p, 42);
  SeirModel b(30000, 10, p, 42);
  SeirModel c(30000, 10, p, 43);
  a.advance(50);
  b.advance(50);
  c.advance(50);
  CHECK(a.trajectory() == b.trajectory());
  CHECK_FALSE(a.trajectory() == c.trajectory());
}

TEST_CASE("expected exposures match the binomial mean under a pinned state") {
  // One-day latency moves all 10 seeds into P/A (weight 1) on day 1; with
  // theta = 0.4 the day-2 exposure count is Binomial(S, 1 - exp(-0.4*10/N)).
  SimParams p;
  p.transmission_rate = 0.4;
  p.sojourn_e = {1.0, 400.0};
  p.sojourn_p = {10.0, 400.0};
  p.sojourn_a = {10.0, 400.0};
  p.detect_prob_a = 0.0;
  p.detect_prob_p = 0.0;
  constexpr std::int64_t kPop = 10000;
  constexpr std::int64_t kSeeded = 10;
  const double p_exposed = 1.0 - std::exp(-0.4 * 10.0 / kPop);
  const double expected = (kPop - kSeeded) * p_exposed;  // ~ 4.0
  double total = 0.0;
  constexpr int kReps = 2000;
  for (int rep = 0; rep < kReps; ++rep) {
    SeirModel model(kPop, kSeeded, p, 1000 + static_cast<std::uint64_t>(rep));
    model.advance(2);
    const auto& days = model.trajectory().days;
    const auto s_before = days[1].census[static_cast<std::size_t>(Compartment::S)];
    const auto s_after = days[2].census[static_cast<std::size_t>(Compartment::S)];
    CHECK(s_before == kPop - kSeeded);  // no infectious pressure before day 2
    total += static_cast<double>(s_before - s_after);
  }
  const double mean = total / kReps;
  const double se = std::sqrt(expected / kReps);  // binomial var ~ mean here
  CHECK(std::abs(mean - expected) < 5.0 * se);
}

TEST_CASE("constructor and advance validate their inputs") {
  SimParams p;
  CHECK_THROWS_AS(SeirModel(0, 1, p, 1), std::invalid_argument);
  CHECK_THROWS_AS(SeirModel(100, 101, p, 1), std::invalid_argument);
  CHECK_THROWS_AS(SeirModel(100, -1, p, 1), std::invalid_argument);

  // Zero index cases are allowed and produce a flat, all-zero epidemic.
  SeirModel empty(100, 0, p, 7);
  empty.advance(30);
  for (const auto& rec : empty.trajectory().days) {
    CHECK(rec.new_detected_cases == 0);
    CHECK(rec.new_deaths == 0);
    CHECK(rec.census[static_cast<std::size_t>(Compartment::S)] == 100);
  }
  SimParams bad = p;
  bad.frac_e_to_p = 1.5;
  CHECK_THROWS_AS(SeirModel(100, 10, bad, 1), std::invalid_argument);
  bad = p;
  bad.sojourn_h.mean_days = -1.0;
  CHECK_THROWS_AS(SeirModel(100, 10, bad, 1), std::invalid_argument);
  bad = p;
  bad.detection_delay_days = 0;
  CHECK_THROWS_AS(SeirModel(100, 10, bad, 1), std::invalid_argument);

  SeirModel model(100, 10, p, 1);
  model.advance(5);
  CHECK(model.day() == 5);
  model.advance(5);  // advancing to the current day is a no-op
  CHECK(model.day() == 5);
  CHECK_THROWS_AS(model.advance(3), std::invalid_argument);  // never backwards
}

TEST_CASE("an epidemic with positive transmission eventually grows") {
  SimParams p;  // defaults: theta = 0.3
  SeirModel model(100000, 10, p, 7);
  model.advance(90);
  const auto& days = model.trajectory().days;
  std::int64_t cumulative = 0;
  for (const auto& rec : days) cumulative += rec.new_detected_cases;
  CHECK(cumulative > 100);  // clearly above the seeded 10
  const auto s_end = days.back().census[static_cast<std::size_t>(Compartment::S)];
  CHECK(s_end < 100000 - 10);
}
