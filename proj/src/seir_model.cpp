#include "epi/seir_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace epi {

namespace {

void check_prob(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string("SimParams: ") + name + " outside [0,1]");
}

void check_sojourn(const SojournSpec& s, const char* name) {
  if (!(s.mean_days > 0.0))
    throw std::invalid_argument(std::string("SimParams: ") + name + " mean must be positive");
  if (!(s.shape > 0.0))
    throw std::invalid_argument(std::string("SimParams: ") + name + " shape must be positive");
}

constexpr int kMaxDay = 1 << 24;  // day-counter overflow guard

}  // namespace

void SimParams::validate() const {
  if (!(transmission_rate >= 0.0) || !std::isfinite(transmission_rate))
    throw std::invalid_argument("SimParams: transmission_rate must be nonnegative");
  check_prob(frac_e_to_p, "frac_e_to_p");
  check_prob(frac_p_to_sm, "frac_p_to_sm");
  check_prob(frac_h_to_c, "frac_h_to_c");
  check_prob(frac_c_to_d, "frac_c_to_d");
  if (!(rel_infectiousness_symptomatic >= 0.0))
    throw std::invalid_argument("SimParams: rel_infectiousness_symptomatic must be nonnegative");
  check_prob(rel_infectiousness_detected, "rel_infectiousness_detected");
  check_prob(detect_prob_a, "detect_prob_a");
  check_prob(detect_prob_p, "detect_prob_p");
  check_prob(detect_prob_sm, "detect_prob_sm");
  check_prob(detect_prob_ss, "detect_prob_ss");
  if (detection_delay_days < 1)
    throw std::invalid_argument("SimParams: detection_delay_days must be >= 1");
  check_sojourn(sojourn_e, "sojourn_e");
  check_sojourn(sojourn_p, "sojourn_p");
  check_sojourn(sojourn_a, "sojourn_a");
  check_sojourn(sojourn_sm, "sojourn_sm");
  check_sojourn(sojourn_ss, "sojourn_ss");
  check_sojourn(sojourn_h, "sojourn_h");
  check_sojourn(sojourn_c, "sojourn_c");
  check_sojourn(sojourn_hp, "sojourn_hp");
}

bool Trajectory::operator==(const Trajectory& other) const {
  if (days.size() != other.days.size()) return false;
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i].new_detected_cases != other.days[i].new_detected_cases) return false;
    if (days[i].new_deaths != other.days[i].new_deaths) return false;
    if (days[i].census != other.days[i].census) return false;
  }
  return seed == other.seed && theta_changes == other.theta_changes && lineage == other.lineage;
}

SeirModel::SeirModel(std::int64_t population, std::int64_t initial_exposed,
                     const SimParams& params, std::uint64_t seed)
    : params_(params), population_(population), rng_(seed) {
  params_.validate();
  if (population <= 0) throw std::invalid_argument("init: population must be positive");
  if (population > static_cast<std::int64_t>(UINT32_MAX))
    throw std::invalid_argument("init: population exceeds supported size");
  if (initial_exposed < 0 || initial_exposed > population)
    throw std::invalid_argument("init: initial_exposed outside [0, population]");
  rebuild_tables();
  occ_[static_cast<int>(Compartment::S)] = population - initial_exposed;
  occ_[static_cast<int>(Compartment::E)] = initial_exposed;
  traj_.seed = seed;
  traj_.theta_changes.emplace_back(0, params_.transmission_rate);
  if (initial_exposed > 0) enter_exposed(initial_exposed, 0);
  DayRecord rec;
  for (int i = 0; i < kNumCompartments; ++i) rec.census[i] = static_cast<std::uint32_t>(occ_[i]);
  traj_.days.push_back(rec);
}

void SeirModel::rebuild_tables() {
  tables_[0] = discretized_gamma(params_.sojourn_e.mean_days, params_.sojourn_e.shape);
  tables_[1] = discretized_gamma(params_.sojourn_p.mean_days, params_.sojourn_p.shape);
  tables_[2] = discretized_gamma(params_.sojourn_a.mean_days, params_.sojourn_a.shape);
  tables_[3] = discretized_gamma(params_.sojourn_sm.mean_days, params_.sojourn_sm.shape);
  tables_[4] = discretized_gamma(params_.sojourn_ss.mean_days, params_.sojourn_ss.shape);
  tables_[5] = discretized_gamma(params_.sojourn_h.mean_days, params_.sojourn_h.shape);
  tables_[6] = discretized_gamma(params_.sojourn_c.mean_days, params_.sojourn_c.shape);
  tables_[7] = discretized_gamma(params_.sojourn_hp.mean_days, params_.sojourn_hp.shape);
}

const DiscreteTable& SeirModel::sojourn_table(Compartment state_u) const {
  switch (state_u) {
    case Compartment::E: return tables_[0];
    case Compartment::Pu: return tables_[1];
    case Compartment::Au: return tables_[2];
    case Compartment::Smu: return tables_[3];
    case Compartment::Ssu: return tables_[4];
    case Compartment::H: return tables_[5];
    case Compartment::C: return tables_[6];
    case Compartment::Hp: return tables_[7];
    default: throw std::logic_error("no sojourn table for compartment");
  }
}

std::int64_t SeirModel::occupancy_sum() const {
  std::int64_t s = 0;
  for (auto v : occ_) s += v;
  return s;
}

double SeirModel::weighted_infectious() const {
  const double wd = params_.rel_infectiousness_detected;
  const double ws = params_.rel_infectiousness_symptomatic;
  auto n = [&](Compartment c) { return static_cast<double>(occ_[static_cast<int>(c)]); };
  return n(Compartment::Au) + n(Compartment::Pu) +
         wd * (n(Compartment::Ad) + n(Compartment::Pd)) +
         ws * (n(Compartment::Smu) + n(Compartment::Ssu)) +
         ws * wd * (n(Compartment::Smd) + n(Compartment::Ssd));
}

void SeirModel::schedule(int day, Compartment from, Compartment to, std::int64_t count) {
  if (count == 0) return;
  queue_[EventKey{day, static_cast<std::uint8_t>(from), static_cast<std::uint8_t>(to)}] += count;
}

void SeirModel::enter_exposed(std::int64_t count, int today) {
  // Latency split first, then the asymptomatic/presymptomatic branch per
  // duration cohort; all subsequent routing happens when the exits fire.
  sojourn_table(Compartment::E).split(rng_, count, [&](int d, std::int64_t k) {
    const std::int64_t to_p = binomial_draw(rng_, k, params_.frac_e_to_p);
    schedule(today + d, Compartment::E, Compartment::Pu, to_p);
    schedule(today + d, Compartment::E, Compartment::Au, k - to_p);
  });
}

void SeirModel::schedule_infectious_exit(Compartment state_u, bool detected,
                                         std::int64_t count, int exit_day) {
  const int off = detected ? 1 : 0;
  switch (state_u) {
    case Compartment::Au:
      schedule(exit_day, static_cast<Compartment>(static_cast<int>(Compartment::Au) + off),
               Compartment::R, count);
      break;
    case Compartment::Pu: {
      const std::int64_t to_sm = binomial_draw(rng_, count, params_.frac_p_to_sm);
      const auto from = static_cast<Compartment>(static_cast<int>(Compartment::Pu) + off);
      schedule(exit_day, from,
               static_cast<Compartment>(static_cast<int>(Compartment::Smu) + off), to_sm);
      schedule(exit_day, from,
               static_cast<Compartment>(static_cast<int>(Compartment::Ssu) + off), count - to_sm);
      break;
    }
    case Compartment::Smu:
      schedule(exit_day, static_cast<Compartment>(static_cast<int>(Compartment::Smu) + off),
               Compartment::R, count);
      break;
    case Compartment::Ssu:
      schedule(exit_day, static_cast<Compartment>(static_cast<int>(Compartment::Ssu) + off),
               Compartment::H, count);
      break;
    default:
      throw std::logic_error("schedule_infectious_exit: not an infectious state");
  }
}

void SeirModel::enter_infectious(Compartment state_u, bool detected,
                                 std::int64_t count, int today) {
  double detect_prob = 0.0;
  switch (state_u) {
    case Compartment::Au: detect_prob = params_.detect_prob_a; break;
    case Compartment::Pu: detect_prob = params_.detect_prob_p; break;
    case Compartment::Smu: detect_prob = params_.detect_prob_sm; break;
    case Compartment::Ssu: detect_prob = params_.detect_prob_ss; break;
    default: throw std::logic_error("enter_infectious: not an infectious state");
  }
  sojourn_table(state_u).split(rng_, count, [&](int d, std::int64_t k) {
    const int exit_day = today + d;
    if (detected) {
      schedule_infectious_exit(state_u, true, k, exit_day);
      return;
    }
    // A successful detection draw always detects; the configured delay only
    // sets the day, capped at state exit for short stays.
    const std::int64_t det = binomial_draw(rng_, k, detect_prob);
    if (det > 0) {
      const int detect_day = std::min(today + params_.detection_delay_days, exit_day);
      schedule(detect_day, state_u,
               static_cast<Compartment>(static_cast<int>(state_u) + 1), det);
      schedule_infectious_exit(state_u, true, det, exit_day);
    }
    if (k - det > 0) schedule_infectious_exit(state_u, false, k - det, exit_day);
  });
}

void SeirModel::enter_hospital_chain(Compartment state, std::int64_t count, int today) {
  sojourn_table(state).split(rng_, count, [&](int d, std::int64_t k) {
    const int exit_day = today + d;
    switch (state) {
      case Compartment::H: {
        const std::int64_t to_c = binomial_draw(rng_, k, params_.frac_h_to_c);
        schedule(exit_day, Compartment::H, Compartment::C, to_c);
        schedule(exit_day, Compartment::H, Compartment::R, k - to_c);
        break;
      }
      case Compartment::C: {
        const std::int64_t to_d = binomial_draw(rng_, k, params_.frac_c_to_d);
        schedule(exit_day, Compartment::C, Compartment::D, to_d);
        schedule(exit_day, Compartment::C, Compartment::Hp, k - to_d);
        break;
      }
      case Compartment::Hp:
        schedule(exit_day, Compartment::Hp, Compartment::R, k);
        break;
      default:
        throw std::logic_error("enter_hospital_chain: unexpected state");
    }
  });
}

void SeirModel::fire(Compartment from, Compartment to, std::int64_t count, int today) {
  auto& nfrom = occ_[static_cast<int>(from)];
  auto& nto = occ_[static_cast<int>(to)];
  nfrom -= count;
  nto += count;
  if (nfrom < 0) throw std::logic_error("negative occupancy after event");

  auto& rec = traj_.days.back();
  if (is_detection_edge(from, to)) {
    rec.new_detected_cases += static_cast<std::uint32_t>(count);
    return;  // mid-stay move; the cohort's exits were scheduled at entry
  }
  if (to == Compartment::D) rec.new_deaths += static_cast<std::uint32_t>(count);

  switch (to) {
    case Compartment::Au:
    case Compartment::Pu:
      enter_infectious(to, false, count, today);
      break;
    case Compartment::Smu:
    case Compartment::Ssu:
      enter_infectious(to, false, count, today);
      break;
    case Compartment::Smd:
      enter_infectious(Compartment::Smu, true, count, today);
      break;
    case Compartment::Ssd:
      enter_infectious(Compartment::Ssu, true, count, today);
      break;
    case Compartment::H:
    case Compartment::C:
    case Compartment::Hp:
      enter_hospital_chain(to, count, today);
      break;
    case Compartment::D:
    case Compartment::R:
      break;
    default:
      throw std::logic_error("fire: unexpected destination");
  }
}

void SeirModel::step_one_day() {
  const int today = day_ + 1;
  traj_.days.emplace_back();

  // Exposures from the start-of-day census.
  const double lambda = weighted_infectious();
  auto& s_count = occ_[static_cast<int>(Compartment::S)];
  if (s_count > 0 && lambda > 0.0 && params_.transmission_rate > 0.0) {
    const double p =
        -std::expm1(-params_.transmission_rate * lambda / static_cast<double>(population_));
    const std::int64_t exposed = binomial_draw(rng_, s_count, p);
    if (exposed > 0) {
      s_count -= exposed;
      occ_[static_cast<int>(Compartment::E)] += exposed;
      enter_exposed(exposed, today);
    }
  }

  // Fire today's queue in key order; everything scheduled during firing lands
  // on a later day (sojourns and the detection delay are >= 1).
  const EventKey lo{today, 0, 0};
  const EventKey hi{today + 1, 0, 0};
  std::vector<std::pair<EventKey, std::int64_t>> todays(queue_.lower_bound(lo),
                                                        queue_.lower_bound(hi));
  queue_.erase(queue_.lower_bound(lo), queue_.lower_bound(hi));
  for (const auto& [key, count] : todays)
    fire(static_cast<Compartment>(key.from), static_cast<Compartment>(key.to), count, today);

  day_ = today;
  auto& rec = traj_.days.back();
  for (int i = 0; i < kNumCompartments; ++i) rec.census[i] = static_cast<std::uint32_t>(occ_[i]);
}

void SeirModel::advance(int until_day) {
  if (until_day < day_)
    throw std::invalid_argument("advance: until_day precedes current day");
  if (until_day > kMaxDay) throw std::invalid_argument("advance: day counter overflow");
  while (day_ < until_day) step_one_day();
}

bool SeirModel::state_equals(const SeirModel& other) const {
  return population_ == other.population_ && day_ == other.day_ && occ_ == other.occ_ &&
         queue_ == other.queue_ && rng_.state() == other.rng_.state() &&
         traj_ == other.traj_;
}

}  // namespace epi
