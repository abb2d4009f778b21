#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "epi/compartments.hpp"
#include "epi/rng.hpp"
#include "epi/sim_params.hpp"
#include "epi/trajectory.hpp"

namespace epi {

// Event-driven stochastic SEIR simulator with daily time steps.
//
// New exposures each day are Binomial(S, 1 - exp(-theta * Lambda / N)) where
// Lambda weights the infectious census by the symptomatic and detected
// multipliers. Every cohort entering a state has its branch targets, sojourn
// durations and detection fate drawn at entry and queued as batched future
// transitions, so the pending-event queue stays O(compartments x horizon).
class SeirModel {
 public:
  SeirModel(std::int64_t population, std::int64_t initial_exposed,
            const SimParams& params, std::uint64_t seed);

  // Runs the simulator forward to `until_day` (inclusive), appending one
  // ledger record per day. until_day must be >= day().
  void advance(int until_day);

  int day() const { return day_; }
  std::int64_t population() const { return population_; }
  std::int64_t occupancy(Compartment c) const { return occ_[static_cast<int>(c)]; }
  std::int64_t occupancy_sum() const;
  const SimParams& params() const { return params_; }
  const Trajectory& trajectory() const { return traj_; }
  std::size_t pending_events() const { return queue_.size(); }

  // Serializes the complete state (params, occupancies, queue, RNG, ledger)
  // into the versioned checkpoint format; see checkpoint.hpp.
  std::vector<std::uint8_t> save_checkpoint() const;

  // Rebuilds a model from checkpoint bytes, optionally overriding the six
  // restart parameters. Invalid bytes or checksum mismatch throw
  // CheckpointError; override values are validated like constructor input.
  static SeirModel restore(std::span<const std::uint8_t> bytes,
                           const RestoreOverrides& overrides = {});

  bool state_equals(const SeirModel& other) const;

 private:
  friend struct CheckpointCodec;

  struct EventKey {
    std::int32_t day;
    std::uint8_t from;
    std::uint8_t to;
    auto operator<=>(const EventKey&) const = default;
  };

  SeirModel() = default;  // used by restore
  void rebuild_tables();
  void step_one_day();
  void schedule(int day, Compartment from, Compartment to, std::int64_t count);
  void fire(Compartment from, Compartment to, std::int64_t count, int today);
  void enter_exposed(std::int64_t count, int today);
  void enter_infectious(Compartment state_u, bool detected, std::int64_t count, int today);
  void schedule_infectious_exit(Compartment state_u, bool detected, std::int64_t count, int exit_day);
  void enter_hospital_chain(Compartment state, std::int64_t count, int today);
  double weighted_infectious() const;
  const DiscreteTable& sojourn_table(Compartment state_u) const;

  SimParams params_;
  std::int64_t population_ = 0;
  int day_ = 0;
  std::array<std::int64_t, kNumCompartments> occ_{};
  std::map<EventKey, std::int64_t> queue_;
  Rng rng_;
  Trajectory traj_;

  // Derived, rebuilt after restore; order: E, P, A, Sm, Ss, H, C, Hp.
  std::array<DiscreteTable, 8> tables_;
};

}  // namespace epi
