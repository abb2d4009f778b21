#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "epi/compartments.hpp"

namespace epi {

// End-of-day record: new detections and deaths on that day plus the census.
struct DayRecord {
  std::uint32_t new_detected_cases = 0;
  std::uint32_t new_deaths = 0;
  std::array<std::uint32_t, kNumCompartments> census{};

  bool operator==(const DayRecord&) const = default;
};

// Day-indexed output ledger; days[0] is the initial state with zero counts.
// The ledger is part of the simulator state, so a restored run keeps the full
// history of the trajectory it continues.
struct Trajectory {
  std::vector<DayRecord> days;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> theta_changes;  // (day, transmission rate)
  std::string lineage;  // checkpoint ancestry, ";"-joined

  int horizon() const { return static_cast<int>(days.size()) - 1; }

  std::vector<std::int64_t> detected_cases() const {
    std::vector<std::int64_t> out(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) out[i] = days[i].new_detected_cases;
    return out;
  }
  std::vector<std::int64_t> deaths() const {
    std::vector<std::int64_t> out(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) out[i] = days[i].new_deaths;
    return out;
  }

  bool operator==(const Trajectory& other) const;
};

}  // namespace epi
