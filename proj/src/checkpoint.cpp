#include "epi/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "epi/seir_model.hpp"

namespace epi {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) {
  if (pos_ + n > buf_.size()) throw CheckpointError("checkpoint truncated");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return buf_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
  pos_ += n;
  return s;
}

// Serializes and rebuilds the complete SeirModel state. Member access goes
// through this friend so the model keeps its internals private.
struct CheckpointCodec {
  static void write_params(ByteWriter& w, const SimParams& p) {
    w.f64(p.transmission_rate);
    w.f64(p.frac_e_to_p);
    w.f64(p.frac_p_to_sm);
    w.f64(p.frac_h_to_c);
    w.f64(p.frac_c_to_d);
    w.f64(p.rel_infectiousness_symptomatic);
    w.f64(p.rel_infectiousness_detected);
    w.f64(p.detect_prob_a);
    w.f64(p.detect_prob_p);
    w.f64(p.detect_prob_sm);
    w.f64(p.detect_prob_ss);
    w.i32(p.detection_delay_days);
    for (const SojournSpec* s : {&p.sojourn_e, &p.sojourn_p, &p.sojourn_a, &p.sojourn_sm,
                                 &p.sojourn_ss, &p.sojourn_h, &p.sojourn_c, &p.sojourn_hp}) {
      w.f64(s->mean_days);
      w.f64(s->shape);
    }
  }

  static SimParams read_params(ByteReader& r) {
    SimParams p;
    p.transmission_rate = r.f64();
    p.frac_e_to_p = r.f64();
    p.frac_p_to_sm = r.f64();
    p.frac_h_to_c = r.f64();
    p.frac_c_to_d = r.f64();
    p.rel_infectiousness_symptomatic = r.f64();
    p.rel_infectiousness_detected = r.f64();
    p.detect_prob_a = r.f64();
    p.detect_prob_p = r.f64();
    p.detect_prob_sm = r.f64();
    p.detect_prob_ss = r.f64();
    p.detection_delay_days = r.i32();
    for (SojournSpec* s : {&p.sojourn_e, &p.sojourn_p, &p.sojourn_a, &p.sojourn_sm,
                           &p.sojourn_ss, &p.sojourn_h, &p.sojourn_c, &p.sojourn_hp}) {
      s->mean_days = r.f64();
      s->shape = r.f64();
    }
    return p;
  }

  static std::vector<std::uint8_t> save(const SeirModel& m) {
    ByteWriter payload;
    payload.u64(static_cast<std::uint64_t>(m.population_));
    payload.i32(m.day_);
    for (std::uint64_t w : m.rng_.state()) payload.u64(w);
    for (std::int64_t v : m.occ_) payload.i64(v);
    payload.u32(static_cast<std::uint32_t>(m.queue_.size()));
    for (const auto& [key, count] : m.queue_) {
      payload.i32(key.day);
      payload.u8(key.from);
      payload.u8(key.to);
      payload.i64(count);
    }
    write_params(payload, m.params_);
    payload.u64(m.traj_.seed);
    payload.u32(static_cast<std::uint32_t>(m.traj_.theta_changes.size()));
    for (const auto& [day, theta] : m.traj_.theta_changes) {
      payload.i32(day);
      payload.f64(theta);
    }
    payload.str(m.traj_.lineage);
    payload.u32(static_cast<std::uint32_t>(m.traj_.days.size()));
    for (const DayRecord& rec : m.traj_.days) {
      payload.u32(rec.new_detected_cases);
      payload.u32(rec.new_deaths);
      for (std::uint32_t c : rec.census) payload.u32(c);
    }

    ByteWriter out;
    out.bytes(std::span<const std::uint8_t>(kCheckpointMagic, 8));
    out.u32(kCheckpointVersion);
    out.u64(payload.data().size());
    out.bytes(payload.data());
    out.u64(fnv1a64(out.data()));
    return std::move(out.data());
  }

  static SeirModel load(std::span<const std::uint8_t> bytes, const RestoreOverrides& o) {
    if (bytes.size() < 8 + 4 + 8 + 8) throw CheckpointError("checkpoint too short");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
      throw CheckpointError("bad checkpoint magic");
    const std::uint64_t stored_sum = fnv1a64(bytes.subspan(0, bytes.size() - 8));
    ByteReader trailer(bytes.subspan(bytes.size() - 8));
    if (trailer.u64() != stored_sum) throw CheckpointError("checkpoint checksum mismatch");

    ByteReader r(bytes.subspan(8, bytes.size() - 16));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
    const std::uint64_t payload_len = r.u64();
    if (payload_len != r.remaining()) throw CheckpointError("checkpoint length mismatch");

    SeirModel m;
    m.population_ = r.i64();
    m.day_ = r.i32();
    std::array<std::uint64_t, 4> rng_state;
    for (auto& w : rng_state) w = r.u64();
    m.rng_.set_state(rng_state);
    for (auto& v : m.occ_) v = r.i64();
    const std::uint32_t n_events = r.u32();
    for (std::uint32_t i = 0; i < n_events; ++i) {
      SeirModel::EventKey key{};
      key.day = r.i32();
      key.from = r.u8();
      key.to = r.u8();
      m.queue_[key] = r.i64();
    }
    m.params_ = read_params(r);
    m.traj_.seed = r.u64();
    const std::uint32_t n_changes = r.u32();
    for (std::uint32_t i = 0; i < n_changes; ++i) {
      const int day = r.i32();
      const double theta = r.f64();
      m.traj_.theta_changes.emplace_back(day, theta);
    }
    m.traj_.lineage = r.str();
    const std::uint32_t n_days = r.u32();
    m.traj_.days.resize(n_days);
    for (auto& rec : m.traj_.days) {
      rec.new_detected_cases = r.u32();
      rec.new_deaths = r.u32();
      for (auto& c : rec.census) c = r.u32();
    }
    if (r.remaining() != 0) throw CheckpointError("trailing bytes in checkpoint payload");

    if (o.seed) {
      m.rng_ = Rng(*o.seed);
      m.traj_.seed = *o.seed;
    }
    if (o.transmission_rate) {
      m.params_.transmission_rate = *o.transmission_rate;
      m.traj_.theta_changes.emplace_back(m.day_, *o.transmission_rate);
    }
    if (o.frac_e_to_p) m.params_.frac_e_to_p = *o.frac_e_to_p;
    if (o.frac_p_to_sm) m.params_.frac_p_to_sm = *o.frac_p_to_sm;
    if (o.rel_infectiousness_symptomatic)
      m.params_.rel_infectiousness_symptomatic = *o.rel_infectiousness_symptomatic;
    if (o.rel_infectiousness_detected)
      m.params_.rel_infectiousness_detected = *o.rel_infectiousness_detected;
    m.params_.validate();
    m.rebuild_tables();
    return m;
  }
};

std::vector<std::uint8_t> SeirModel::save_checkpoint() const {
  return CheckpointCodec::save(*this);
}

SeirModel SeirModel::restore(std::span<const std::uint8_t> bytes,
                             const RestoreOverrides& overrides) {
  return CheckpointCodec::load(bytes, overrides);
}

}  // namespace epi
