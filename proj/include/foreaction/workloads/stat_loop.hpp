#pragma once

#include <string>
#include <vector>

#include "foreaction/engine.hpp"
#include "foreaction/store.hpp"

namespace foreaction::workloads {

// Directory metadata walk: one fstat_at per entry, all pure and independent.
struct StatLoopConfig {
    std::string directory = "tree";
    std::uint64_t entries = 100;
    // Entry names statted on top of the real listing; they come back ENOENT.
    std::vector<std::string> phantom_entries;
    // Fault injection for mutation tests: branch hook exits one iteration early.
    bool mutate_wrong_choice = false;
};

struct StatLoopResult {
    std::vector<std::pair<std::int64_t, StatRecord>> records;
    SessionStats stats;

    Digest output_digest() const;
};

void make_stat_fixture(FileStore& store, const StatLoopConfig& cfg, std::uint64_t seed);

StatLoopResult run_stat_loop(FileStore& store, const StatLoopConfig& cfg, Executor& executor,
                             const SessionOptions& options);

}  // namespace foreaction::workloads
