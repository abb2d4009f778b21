// On-disk checkpoint store with fanout directories and a rebuildable index.
#include "epi/checkpoint_store.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epi/checkpoint.hpp"

namespace epi {
namespace {

std::string key_file_name(const CheckpointKey& key) {
  return "p" + std::to_string(key.particle) + ".ckpt";
}

void write_file_atomic(const std::filesystem::path& target,
                       std::span<const std::uint8_t> bytes) {
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StoreError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw StoreError("rename to " + target.string() + ": " + ec.message());
}

}  // namespace

CheckpointStore::CheckpointStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
  load_index();
}

std::filesystem::path CheckpointStore::path_for(const CheckpointKey& key) const {
  char fan[8];
  std::snprintf(fan, sizeof(fan), "%02x", static_cast<unsigned>(key.particle & 0xff));
  return root_ / ("w" + std::to_string(key.window)) / fan / key_file_name(key);
}

void CheckpointStore::put_file(const CheckpointKey& key,
                               std::span<const std::uint8_t> bytes) {
  const std::filesystem::path target = path_for(key);
  {
    std::lock_guard<std::mutex> lock(io_mutex_);
    std::filesystem::create_directories(target.parent_path());
  }
  write_file_atomic(target, bytes);
}

void CheckpointStore::index_add(const CheckpointKey& key, std::uint64_t checksum) {
  std::lock_guard<std::mutex> lock(io_mutex_);
  index_[key] = checksum;
  std::ofstream log(root_ / "index.log", std::ios::app);
  if (!log) throw StoreError("cannot append to index.log");
  log << key.window << '\t' << key.particle << '\t' << checksum << '\n';
}

bool CheckpointStore::has(const CheckpointKey& key) const {
  std::lock_guard<std::mutex> lock(io_mutex_);
  return index_.contains(key);
}

std::vector<std::uint8_t> CheckpointStore::get(const CheckpointKey& key) const {
  std::uint64_t expected = 0;
  {
    std::lock_guard<std::mutex> lock(io_mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) {
      throw StoreError("checkpoint (window " + std::to_string(key.window) +
                       ", particle " + std::to_string(key.particle) + ") not in store");
    }
    expected = it->second;
  }
  const std::filesystem::path file = path_for(key);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StoreError("cannot open " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (fnv1a64(bytes) != expected) {
    throw StoreError("checksum mismatch for " + file.string());
  }
  return bytes;
}

std::size_t CheckpointStore::gc(const std::set<CheckpointKey>& keep) {
  std::lock_guard<std::mutex> lock(io_mutex_);
  std::size_t removed = 0;
  for (auto it = index_.begin(); it != index_.end();) {
    if (keep.contains(it->first)) {
      ++it;
      continue;
    }
    std::error_code ec;
    std::filesystem::remove(path_for(it->first), ec);
    if (ec) throw StoreError("gc remove failed: " + ec.message());
    it = index_.erase(it);
    ++removed;
  }
  rewrite_index_log();
  return removed;
}

std::vector<CheckpointKey> CheckpointStore::keys() const {
  std::lock_guard<std::mutex> lock(io_mutex_);
  std::vector<CheckpointKey> out;
  out.reserve(index_.size());
  for (const auto& [key, _] : index_) out.push_back(key);
  return out;
}

void CheckpointStore::load_index() {
  index_.clear();
  std::ifstream log(root_ / "index.log");
  if (!log) return;
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    CheckpointKey key;
    std::uint64_t checksum = 0;
    if (fields >> key.window >> key.particle >> checksum) index_[key] = checksum;
  }
}

void CheckpointStore::rebuild_index() {
  std::lock_guard<std::mutex> lock(io_mutex_);
  index_.clear();
  if (!std::filesystem::exists(root_)) return;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ckpt") continue;
    const std::string dir = entry.path().parent_path().parent_path().filename().string();
    const std::string stem = entry.path().stem().string();
    if (dir.size() < 2 || dir[0] != 'w' || stem.size() < 2 || stem[0] != 'p') continue;
    CheckpointKey key;
    key.window = std::stoi(dir.substr(1));
    key.particle = static_cast<std::uint32_t>(std::stoul(stem.substr(1)));
    std::ifstream in(entry.path(), std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    index_[key] = fnv1a64(bytes);
  }
  rewrite_index_log();
}

void CheckpointStore::rewrite_index_log() const {
  const std::filesystem::path log_path = root_ / "index.log";
  const std::filesystem::path tmp = log_path.string() + ".tmp";
  {
    std::ofstream log(tmp, std::ios::trunc);
    if (!log) throw StoreError("cannot rewrite index.log");
    for (const auto& [key, checksum] : index_) {
      log << key.window << '\t' << key.particle << '\t' << checksum << '\n';
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, log_path, ec);
  if (ec) throw StoreError("rename index.log: " + ec.message());
}

}  // namespace epi
