#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epi/checkpoint_store.hpp"
#include "epi/seir_model.hpp"

namespace epi {

// One simulation task: either start a fresh model or restore a stored
// checkpoint (optionally overriding the restart-safe parameters), then
// advance to `advance_to` and store the resulting checkpoint under
// (result_window, particle).
struct SimTask {
  std::uint32_t particle = 0;
  int advance_to = 0;

  std::optional<CheckpointKey> restore_from;  // absent => fresh init
  RestoreOverrides overrides;

  // Fresh-init fields (used when restore_from is absent).
  std::int64_t population = 0;
  std::int64_t initial_exposed = 0;
  SimParams params;
  std::uint64_t seed = 0;
};

struct RunManifest {
  std::uint64_t master_seed = 0;
  int result_window = 0;
  int parallelism = 1;
  std::vector<SimTask> tasks;

  std::string to_text() const;
  static RunManifest from_text(const std::string& text);
};

struct TaskOutcome {
  bool ok = false;
  std::string error;  // set when !ok
  Trajectory trajectory;
};

// Runs every task (bounded worker pool of manifest.parallelism threads),
// stores each resulting checkpoint, and returns per-task outcomes indexed
// like manifest.tasks. Task-level failures are collected, not fatal; store
// I/O failures abort the run. Before launching anything, verifies that every
// referenced checkpoint exists and reports all offenders at once.
std::vector<TaskOutcome> execute(const RunManifest& manifest, CheckpointStore& store);

}  // namespace epi
