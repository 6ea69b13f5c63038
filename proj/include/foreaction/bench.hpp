#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "foreaction/device.hpp"
#include "foreaction/engine.hpp"
#include "foreaction/sim_executor.hpp"
#include "foreaction/trace.hpp"

namespace foreaction::bench {

enum class WorkloadKind { stat_loop, copy_loop, bptree_load, bptree_scan, lsm_get };
enum class ExecutorKind { sim, worker_pool };

const char* to_string(WorkloadKind w);
const char* to_string(ExecutorKind e);
std::optional<WorkloadKind> workload_from_string(const std::string& name);
std::optional<ExecutorKind> executor_from_string(const std::string& name);

// Fixture sizes, tuned so a full depth sweep stays interactive.
struct WorkloadScale {
    std::uint64_t stat_entries = 120;
    std::uint64_t copy_file_size = 12 * 16384 + 5000;  // final block is partial
    std::uint64_t copy_block_size = 16384;
    std::uint64_t bptree_records = 600;
    std::uint32_t bptree_degree = 16;
    std::uint32_t lsm_l0_tables = 4;
    std::uint32_t lsm_levels = 3;
    std::uint32_t lsm_keys_per_table = 128;
};

struct RunConfig {
    WorkloadKind workload = WorkloadKind::stat_loop;
    ExecutorKind executor = ExecutorKind::sim;
    std::uint32_t depth = 0;
    std::uint64_t seed = 1;
    DeviceModel device;
    std::size_t workers = 0;  // 0 = min(depth, 2 x hardware threads)
    WorkloadScale scale;
    bool log_prepares = false;
};

struct RunOutcome {
    RunArtifacts artifacts;
    SessionStats stats;
    std::uint64_t makespan_us = 0;  // virtual time (sim) or wall clock (worker pool)
    std::vector<DeviceOp> device_log;  // sim executor only
};

// Builds a fresh fixture from the seed, runs the workload once, and collects
// everything the synchrony oracle compares. The depth-0 invocation of this
// function is the synchronous oracle run.
RunOutcome run_workload(const RunConfig& cfg);

struct BenchSpec {
    WorkloadKind workload = WorkloadKind::stat_loop;
    std::vector<std::uint32_t> depths = {0, 1, 4, 16};
    ExecutorKind executor = ExecutorKind::sim;
    DeviceModel device;
    std::uint64_t seed = 1;
    std::uint32_t reps = 1;
    std::uint32_t clients = 1;
    WorkloadScale scale;
};

struct BenchRow {
    std::string workload;
    std::uint32_t depth = 0;
    std::string executor;
    std::uint32_t rep = 0;
    std::uint64_t makespan = 0;
    std::uint64_t prepared = 0;
    std::uint64_t harvested = 0;
    std::uint64_t cancelled = 0;
    std::uint64_t sync_issued = 0;
    bool synchrony_ok = false;
};

inline constexpr const char* kCsvHeader =
    "workload,depth,executor,rep,makespan,prepared,harvested,cancelled,sync_issued,"
    "synchrony_ok";

std::vector<BenchRow> run_bench(const BenchSpec& spec);
void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);
bool all_synchrony_ok(const std::vector<BenchRow>& rows);

}  // namespace foreaction::bench
