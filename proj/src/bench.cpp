#include "foreaction/bench.hpp"

#include <chrono>
#include <future>
#include <ostream>
#include <set>
#include <stdexcept>

#include "foreaction/worker_pool_executor.hpp"
#include "foreaction/workloads/bptree.hpp"
#include "foreaction/workloads/copy_loop.hpp"
#include "foreaction/workloads/fixtures.hpp"
#include "foreaction/workloads/lsm.hpp"
#include "foreaction/workloads/stat_loop.hpp"

namespace foreaction::bench {

using namespace foreaction::workloads;

const char* to_string(WorkloadKind w) {
    switch (w) {
        case WorkloadKind::stat_loop: return "stat-loop";
        case WorkloadKind::copy_loop: return "copy-loop";
        case WorkloadKind::bptree_load: return "bptree-load";
        case WorkloadKind::bptree_scan: return "bptree-scan";
        case WorkloadKind::lsm_get: return "lsm-get";
    }
    return "?";
}

const char* to_string(ExecutorKind e) {
    return e == ExecutorKind::sim ? "sim" : "worker-pool";
}

std::optional<WorkloadKind> workload_from_string(const std::string& name) {
    for (auto w : {WorkloadKind::stat_loop, WorkloadKind::copy_loop, WorkloadKind::bptree_load,
                   WorkloadKind::bptree_scan, WorkloadKind::lsm_get})
        if (name == to_string(w)) return w;
    return std::nullopt;
}

std::optional<ExecutorKind> executor_from_string(const std::string& name) {
    if (name == "sim") return ExecutorKind::sim;
    if (name == "worker-pool") return ExecutorKind::worker_pool;
    return std::nullopt;
}

namespace {

struct LsmFixture {
    LsmConfig config;
    std::uint64_t target_key = 0;  // misses every table: the full-chain case
};

LsmFixture make_lsm_fixture(FileStore& store, const WorkloadScale& scale, std::uint64_t seed) {
    Rng rng(seed);
    LsmFixture fx;
    std::set<std::uint64_t> used;

    auto make_table = [&](std::uint64_t lo, std::uint64_t hi, std::uint32_t n) {
        std::set<std::uint64_t> keys;
        while (keys.size() < n) {
            std::uint64_t k = rng.range(lo, hi);
            keys.insert(k);
        }
        std::vector<std::pair<std::uint64_t, std::uint64_t>> recs;
        for (std::uint64_t k : keys) {
            recs.emplace_back(k, rng.next());
            used.insert(k);
        }
        return recs;
    };

    constexpr std::uint64_t kSpace = 1u << 20;
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> l0;
    for (std::uint32_t i = 0; i < scale.lsm_l0_tables; ++i)
        l0.push_back(make_table(0, kSpace, scale.lsm_keys_per_table));

    std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>> levels;
    for (std::uint32_t lv = 0; lv < scale.lsm_levels; ++lv) {
        std::uint32_t tables = 2 + lv;
        std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> level;
        std::uint64_t stripe = kSpace / tables;
        for (std::uint32_t t = 0; t < tables; ++t)
            level.push_back(make_table(t * stripe, (t + 1) * stripe - 1,
                                       scale.lsm_keys_per_table));
        levels.push_back(std::move(level));
    }

    std::map<std::uint64_t, std::uint64_t> memtable;
    for (int i = 0; i < 8; ++i) memtable[rng.range(0, kSpace)] = rng.next();

    write_lsm_image(store, fx.config, memtable, l0, levels);

    do {
        fx.target_key = rng.range(0, kSpace);
    } while (used.count(fx.target_key) > 0 || memtable.count(fx.target_key) > 0);
    return fx;
}

}  // namespace

RunOutcome run_workload(const RunConfig& cfg) {
    VirtualFileStore store;
    TraceRecorder recorder;
    RunOutcome out;

    std::unique_ptr<Executor> executor;
    SimExecutor* sim = nullptr;
    if (cfg.executor == ExecutorKind::sim) {
        auto e = std::make_unique<SimExecutor>(cfg.device, store);
        sim = e.get();
        executor = std::move(e);
    } else {
        std::size_t workers =
            cfg.workers ? cfg.workers : WorkerPoolExecutor::default_workers(cfg.depth);
        executor = std::make_unique<WorkerPoolExecutor>(store, workers);
    }

    SessionOptions options;
    options.depth = cfg.depth;
    options.trace = &recorder;
    options.log_prepares = cfg.log_prepares;

    Digest output;
    auto wall_start = std::chrono::steady_clock::now();

    switch (cfg.workload) {
        case WorkloadKind::stat_loop: {
            StatLoopConfig wl;
            wl.entries = cfg.scale.stat_entries;
            make_stat_fixture(store, wl, cfg.seed);
            auto r = run_stat_loop(store, wl, *executor, options);
            output = r.output_digest();
            out.stats = r.stats;
            break;
        }
        case WorkloadKind::copy_loop: {
            CopyLoopConfig wl;
            wl.block_size = cfg.scale.copy_block_size;
            make_copy_fixture(store, wl, cfg.scale.copy_file_size, cfg.seed);
            auto r = run_copy_loop(store, wl, *executor, options);
            output = r.output_digest();
            out.stats = r.stats;
            break;
        }
        case WorkloadKind::bptree_load: {
            BPTreeConfig wl;
            wl.degree = cfg.scale.bptree_degree;
            auto records = random_records(cfg.scale.bptree_records, cfg.seed);
            auto r = bptree_load(store, wl, records, *executor, options);
            output = r.output_digest();
            out.stats = r.stats;
            break;
        }
        case WorkloadKind::bptree_scan: {
            BPTreeConfig wl;
            wl.degree = cfg.scale.bptree_degree;
            auto records = random_records(cfg.scale.bptree_records, cfg.seed);
            {
                // The tree is part of the fixture; build it synchronously with
                // a side executor so only the scan is measured and traced.
                SimExecutor builder(cfg.device, store);
                SessionOptions sync;
                bptree_load(store, wl, records, builder, sync);
            }
            Rng pick(cfg.seed ^ 0x5caull);
            std::uint64_t a = records[pick.below(records.size())].first;
            std::uint64_t b = records[pick.below(records.size())].first;
            auto r = bptree_scan(store, wl, std::min(a, b), std::max(a, b), *executor,
                                 options);
            output = r.output_digest();
            out.stats = r.stats;
            break;
        }
        case WorkloadKind::lsm_get: {
            LsmFixture fx = make_lsm_fixture(store, cfg.scale, cfg.seed);
            LsmDb db = open_lsm(store, fx.config);
            auto r = lsm_get(store, db, fx.target_key, *executor, options);
            close_lsm(store, db);
            output = r.output_digest();
            out.stats = r.stats;
            break;
        }
    }

    if (sim) {
        out.makespan_us = sim->now();
        out.device_log = sim->device_log();
    } else {
        out.makespan_us = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::steady_clock::now() - wall_start)
                .count());
    }
    out.artifacts.output = output;
    out.artifacts.store = store.content_digest();
    out.artifacts.trace = recorder.take();
    return out;
}

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
    std::vector<BenchRow> rows;
    for (std::uint32_t depth : spec.depths) {
        for (std::uint32_t rep = 0; rep < spec.reps; ++rep) {
            std::uint32_t clients = std::max(1u, spec.clients);
            std::vector<std::future<std::pair<RunOutcome, SynchronyVerdict>>> futs;
            for (std::uint32_t c = 0; c < clients; ++c) {
                RunConfig cfg;
                cfg.workload = spec.workload;
                cfg.executor = spec.executor;
                cfg.depth = depth;
                cfg.seed = spec.seed + c;
                cfg.device = spec.device;
                cfg.scale = spec.scale;
                futs.push_back(std::async(
                    clients > 1 ? std::launch::async : std::launch::deferred, [cfg] {
                        RunConfig ref_cfg = cfg;
                        ref_cfg.depth = 0;
                        RunOutcome ref = run_workload(ref_cfg);
                        RunOutcome got = run_workload(cfg);
                        SynchronyVerdict v = check_equivalence(ref.artifacts, got.artifacts);
                        return std::make_pair(std::move(got), v);
                    }));
            }
            BenchRow row;
            row.workload = to_string(spec.workload);
            row.depth = depth;
            row.executor = to_string(spec.executor);
            row.rep = rep;
            row.synchrony_ok = true;
            for (auto& f : futs) {
                auto [outcome, verdict] = f.get();
                row.makespan = std::max(row.makespan, outcome.makespan_us);
                row.prepared += outcome.stats.prepared;
                row.harvested += outcome.stats.harvested;
                row.cancelled += outcome.stats.cancelled;
                row.sync_issued += outcome.stats.sync_issued;
                row.synchrony_ok = row.synchrony_ok && verdict.equivalent;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.workload << ',' << r.depth << ',' << r.executor << ',' << r.rep << ','
            << r.makespan << ',' << r.prepared << ',' << r.harvested << ',' << r.cancelled
            << ',' << r.sync_issued << ',' << (r.synchrony_ok ? "true" : "false") << '\n';
    }
}

bool all_synchrony_ok(const std::vector<BenchRow>& rows) {
    for (const auto& r : rows)
        if (!r.synchrony_ok) return false;
    return true;
}

}  // namespace foreaction::bench
