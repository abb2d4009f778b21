#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace epi {

struct SojournSpec {
  double mean_days = 1.0;  // > 0
  double shape = 4.0;      // gamma shape, > 0
};

// Full simulator parameter set. Transmission rate and the branch/infectiousness
// parameters marked below are the ones the checkpoint restart may override;
// everything else is fixed at trajectory-creation time.
struct SimParams {
  double transmission_rate = 0.3;            // overridable on restart
  double frac_e_to_p = 0.65;                 // overridable on restart
  double frac_p_to_sm = 0.8;                 // overridable on restart
  double frac_h_to_c = 0.25;
  double frac_c_to_d = 0.3;
  double rel_infectiousness_symptomatic = 1.5;  // overridable on restart
  double rel_infectiousness_detected = 0.1;     // overridable on restart
  double detect_prob_a = 0.15;
  double detect_prob_p = 0.15;
  double detect_prob_sm = 0.6;
  double detect_prob_ss = 0.9;
  int detection_delay_days = 2;  // >= 1
  SojournSpec sojourn_e{3.0, 4.0};
  SojournSpec sojourn_p{2.0, 4.0};
  SojournSpec sojourn_a{5.0, 4.0};
  SojournSpec sojourn_sm{6.0, 4.0};
  SojournSpec sojourn_ss{4.0, 4.0};
  SojournSpec sojourn_h{5.0, 4.0};
  SojournSpec sojourn_c{7.0, 4.0};
  SojournSpec sojourn_hp{3.0, 4.0};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// The six restart parameters a checkpoint restore may change; scheduled events
// are never touched, only draws made after the restore see the new values.
struct RestoreOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> transmission_rate;
  std::optional<double> frac_e_to_p;
  std::optional<double> frac_p_to_sm;
  std::optional<double> rel_infectiousness_symptomatic;
  std::optional<double> rel_infectiousness_detected;

  bool empty() const {
    return !seed && !transmission_rate && !frac_e_to_p && !frac_p_to_sm &&
           !rel_infectiousness_symptomatic && !rel_infectiousness_detected;
  }
};

}  // namespace epi
