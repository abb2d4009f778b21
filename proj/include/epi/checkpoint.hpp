#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace epi {

// Raised on malformed checkpoint bytes: bad magic, unknown version, truncated
// payload, or checksum mismatch. Nothing is partially restored.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::uint8_t kCheckpointMagic[8] = {'E', 'P', 'I', 'C', 'K', 'P', 'T', 0};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// FNV-1a over a byte range; the checkpoint trailer is this over everything
// that precedes it.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

// Little-endian byte packing used by the checkpoint format.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(const std::string& s);
  std::vector<std::uint8_t>& data() { return buf_; }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : buf_(b) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::size_t remaining() const { return buf_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n);
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace epi
