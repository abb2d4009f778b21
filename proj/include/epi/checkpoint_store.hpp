#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace epi {

class StoreError : public std::runtime_error {
 public:
  explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointKey {
  int window = 0;
  std::uint32_t particle = 0;
  auto operator<=>(const CheckpointKey&) const = default;
};

// Persistent checkpoint files keyed by (window, particle id), fanned out by
// particle-id prefix, with an append-only text index that can be rebuilt from
// a directory scan. File writes go through temp-then-rename so interrupted
// runs never leave a corrupt entry behind.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path root);

  // Writes the checkpoint file; thread-safe, does not touch the index. The
  // caller records the entry afterwards (in a deterministic order) with
  // index_add().
  void put_file(const CheckpointKey& key, std::span<const std::uint8_t> bytes);
  void index_add(const CheckpointKey& key, std::uint64_t checksum);

  bool has(const CheckpointKey& key) const;
  // Reads and checksum-verifies the entry; throws StoreError if absent or
  // corrupt.
  std::vector<std::uint8_t> get(const CheckpointKey& key) const;

  // Deletes every indexed checkpoint not in `keep`; returns the number
  // removed. The index is rewritten to the surviving set.
  std::size_t gc(const std::set<CheckpointKey>& keep);

  std::vector<CheckpointKey> keys() const;
  // Drops the in-memory index and re-derives it from the files on disk.
  void rebuild_index();

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path path_for(const CheckpointKey& key) const;
  void load_index();
  void rewrite_index_log() const;

  std::filesystem::path root_;
  std::map<CheckpointKey, std::uint64_t> index_;  // key -> checksum
  mutable std::mutex io_mutex_;
};

}  // namespace epi
