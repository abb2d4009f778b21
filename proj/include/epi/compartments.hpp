#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace epi {

// Disease states. Subscript u/d = infection undetected/detected. D and R are
// absorbing. The enum order matters: for states with a detected sibling the
// undetected state comes first, which makes same-day detection moves sort
// ahead of the exits of the freshly detected cohort.
enum class Compartment : std::uint8_t {
  S = 0,
  E = 1,
  Au = 2,
  Ad = 3,
  Pu = 4,
  Pd = 5,
  Smu = 6,
  Smd = 7,
  Ssu = 8,
  Ssd = 9,
  H = 10,
  C = 11,
  Hp = 12,
  D = 13,
  R = 14,
};

inline constexpr int kNumCompartments = 15;

constexpr std::array<std::string_view, kNumCompartments> kCompartmentNames = {
    "S", "E", "A_u", "A_d", "P_u", "P_d", "Sm_u", "Sm_d", "Ss_u", "Ss_d",
    "H", "C", "Hp", "D", "R"};

inline std::string_view to_string(Compartment c) {
  return kCompartmentNames[static_cast<int>(c)];
}

// The sibling map for detection moves (X_u -> X_d).
inline bool is_detection_edge(Compartment from, Compartment to) {
  switch (from) {
    case Compartment::Au: return to == Compartment::Ad;
    case Compartment::Pu: return to == Compartment::Pd;
    case Compartment::Smu: return to == Compartment::Smd;
    case Compartment::Ssu: return to == Compartment::Ssd;
    default: return false;
  }
}

}  // namespace epi
