#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <unistd.h>
#include <map>

#include "foreaction/posix_store.hpp"
#include "foreaction/sim_executor.hpp"
#include "foreaction/worker_pool_executor.hpp"
#include "foreaction/workloads/bptree.hpp"
#include "foreaction/workloads/copy_loop.hpp"
#include "foreaction/workloads/fixtures.hpp"
#include "foreaction/workloads/lsm.hpp"
#include "foreaction/workloads/stat_loop.hpp"

using namespace foreaction;
using namespace foreaction::workloads;

namespace {

SessionOptions depth_opts(std::uint32_t depth) {
    SessionOptions o;
    o.depth = depth;
    return o;
}

// Brute-force get: walk raw table bytes candidate by candidate, newest first,
// independent of the engine and executors.
std::optional<std::uint64_t> lsm_get_bruteforce(FileStore& store, const LsmDb& db,
                                                std::uint64_t key) {
    if (auto it = db.memtable.find(key); it != db.memtable.end()) return it->second;
    for (const TableMeta* t : lsm_candidates(db, key)) {
        auto bytes = store.read_file(t->path);
        // Scan every record in the data section (everything before the index).
        for (std::uint64_t off = 0; off + 16 <= t->index_off; off += 16) {
            std::uint64_t k, v;
            std::memcpy(&k, bytes.data() + off, 8);
            std::memcpy(&v, bytes.data() + off + 8, 8);
            if (k == key) return v;
        }
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("stat loop matches its synchronous run record for record") {
    StatLoopConfig cfg;
    cfg.entries = 200;
    auto run_at = [&](std::uint32_t depth) {
        VirtualFileStore store;
        make_stat_fixture(store, cfg, 99);
        SimExecutor exec(DeviceModel{}, store);
        return run_stat_loop(store, cfg, exec, depth_opts(depth));
    };
    auto sync = run_at(0);
    auto spec = run_at(16);
    REQUIRE(sync.records.size() == spec.records.size());
    for (std::size_t i = 0; i < sync.records.size(); ++i) {
        CHECK(sync.records[i].first == spec.records[i].first);
        CHECK(sync.records[i].second == spec.records[i].second);
    }
}

TEST_CASE("stat loop on an empty directory issues nothing") {
    VirtualFileStore store;
    StatLoopConfig cfg;
    cfg.entries = 0;
    make_stat_fixture(store, cfg, 1);
    SimExecutor exec(DeviceModel{}, store);
    auto r = run_stat_loop(store, cfg, exec, depth_opts(16));
    CHECK(r.records.empty());
    CHECK(r.stats.prepared == 0);
    CHECK(r.stats.sync_issued == 0);
    CHECK(exec.now() == 0);
}

TEST_CASE("stat loop speculation reaches the device-parallel makespan") {
    VirtualFileStore store;
    StatLoopConfig cfg;
    cfg.entries = 1000;
    make_stat_fixture(store, cfg, 7);
    SimExecutor exec(DeviceModel{}, store);
    auto r = run_stat_loop(store, cfg, exec, depth_opts(16));
    (void)r;
    // With P=16 the speculated walk must beat 1/8 of the serial makespan.
    CHECK(exec.now() * 8 <= 1000 * 100);
}

TEST_CASE("copy loop produces a byte-identical destination") {
    CopyLoopConfig cfg;
    cfg.block_size = 128 * 1024;
    auto run_at = [&](std::uint32_t depth) {
        VirtualFileStore store;
        make_copy_fixture(store, cfg, 4 * 1024 * 1024, 55);
        SimExecutor exec(DeviceModel{}, store);
        auto r = run_copy_loop(store, cfg, exec, depth_opts(depth));
        return std::make_tuple(store.read_file(cfg.source), store.read_file(cfg.dest),
                               r.bytes_copied, exec.device_log());
    };
    auto [src0, dst0, bytes0, log0] = run_at(0);
    CHECK(src0 == dst0);
    CHECK(bytes0 == src0.size());

    auto [src8, dst8, bytes8, log8] = run_at(8);
    CHECK(src8 == dst8);
    CHECK(bytes8 == src8.size());

    // Every write starts only after its linked read completed.
    std::map<std::uint64_t, std::uint64_t> read_done;
    for (const auto& op : log8)
        if (op.type == SyscallType::pread) read_done[op.offset] = op.completion;
    std::size_t writes = 0;
    for (const auto& op : log8)
        if (op.type == SyscallType::pwrite) {
            REQUIRE(read_done.count(op.offset) == 1);
            CHECK(op.start >= read_done[op.offset]);
            ++writes;
        }
    CHECK(writes == 32);
}

TEST_CASE("copy loop with a zero-byte source issues no pairs") {
    VirtualFileStore store;
    CopyLoopConfig cfg;
    make_copy_fixture(store, cfg, 0, 5);
    SimExecutor exec(DeviceModel{}, store);
    auto r = run_copy_loop(store, cfg, exec, depth_opts(8));
    CHECK(r.blocks == 0);
    CHECK(r.bytes_copied == 0);
    CHECK(store.read_file(cfg.dest).empty());
}

TEST_CASE("copy loop's final partial block is exact") {
    VirtualFileStore store;
    CopyLoopConfig cfg;
    cfg.block_size = 4096;
    make_copy_fixture(store, cfg, 3 * 4096 + 123, 5);
    SimExecutor exec(DeviceModel{}, store);
    auto r = run_copy_loop(store, cfg, exec, depth_opts(8));
    CHECK(r.blocks == 4);
    CHECK(store.read_file(cfg.dest) == store.read_file(cfg.source));
}

TEST_CASE("a short read severs the pair and the loop re-issues synchronously") {
    // The graph believes the file is longer than it is: the speculated final
    // read comes back short, the linked write is cancelled, and the engine
    // falls back to the application's own write.
    VirtualFileStore store;
    std::vector<std::byte> data(10000);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::byte>(i);
    store.put_file("src.bin", std::move(data), 1);

    auto open = [&](const std::string& p, std::uint32_t flags) {
        SyscallRequest r;
        r.type = SyscallType::open_at;
        r.path = p;
        r.flags = flags;
        return static_cast<std::int32_t>(store.execute(r).rc);
    };
    std::int32_t fd_src = open("src.bin", kOpenRead);
    std::int32_t fd_dst = open("dst.bin", kOpenWrite | kOpenCreate);

    const std::uint64_t block = 4096;
    const std::uint64_t believed_size = 3 * block;  // actual file is 10000 < 12288
    const std::uint64_t blocks = 3;

    struct State {
        Session* session = nullptr;
    } state;
    auto graph = std::make_shared<ForeactionGraph>("short-copy");
    NodeRef rd = graph->add_syscall_node(
        "read", SyscallType::pread,
        [&](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= blocks) return r;
            r.ready = true;
            r.link = true;
            r.args.type = SyscallType::pread;
            r.args.fd = fd_src;
            r.args.offset = e[0] * block;
            r.args.length = std::min(block, believed_size - e[0] * block);
            return r;
        },
        SaveResultHook{});
    NodeRef wr = graph->add_syscall_node(
        "write", SyscallType::pwrite,
        [&state, &blocks, fd_dst, block](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= blocks || !state.session) return r;
            auto buf = state.session->instance_buffer("read", e);
            if (buf.empty()) return r;
            r.ready = true;
            r.args.type = SyscallType::pwrite;
            r.args.fd = fd_dst;
            r.args.offset = e[0] * block;
            r.args.payload = buf;
            return r;
        },
        SaveResultHook{});
    NodeRef more = graph->add_branch_node("more", [&](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = e[0] + 1 < blocks ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), rd);
    graph->set_next(rd, wr);
    graph->set_next(wr, more);
    graph->branch_append_child(more, rd, true);
    graph->branch_append_child(more, graph->end());
    REQUIRE(graph->validate().empty());

    SimExecutor exec(DeviceModel{}, store);
    SessionOptions opts;
    opts.depth = 8;
    opts.verify_args = false;  // the application legitimately writes fewer bytes
    Session session(graph, InputVarSet{}, opts, exec);
    state.session = &session;

    std::vector<std::byte> buf(block);
    std::uint64_t copied = 0;
    for (std::uint64_t e = 0; e < blocks; ++e) {
        SyscallRequest rq;
        rq.type = SyscallType::pread;
        rq.fd = fd_src;
        rq.offset = e * block;
        rq.length = std::min(block, believed_size - e * block);
        rq.dest = buf;
        auto rc = session.intercept(rq);
        std::uint64_t got = rc.rc > 0 ? static_cast<std::uint64_t>(rc.rc) : 0;
        SyscallRequest wq;
        wq.type = SyscallType::pwrite;
        wq.fd = fd_dst;
        wq.offset = e * block;
        wq.payload = std::span<const std::byte>(buf.data(), got);
        auto wc = session.intercept(wq);
        if (wc.rc > 0) copied += static_cast<std::uint64_t>(wc.rc);
    }
    auto stats = session.finish();
    CHECK(copied == 10000);
    CHECK(store.read_file("dst.bin") == store.read_file("src.bin"));
    // The final pair was severed: at least one sync re-issue beyond epoch 0.
    CHECK(stats.sync_issued >= 2);
}

TEST_CASE("bptree load + full scan equals the sorted reference") {
    // Full-scale shape: degree 510, 100k random 64-bit keys and values.
    auto records = random_records(100'000, 1234);
    VirtualFileStore store;
    BPTreeConfig cfg;
    cfg.degree = 510;
    SimExecutor exec(DeviceModel{}, store);
    auto load = bptree_load(store, cfg, records, exec, depth_opts(256));
    CHECK(load.leaf_pages == (records.size() + 509) / 510);
    CHECK(load.height >= 2);

    CHECK(bptree_check(store, cfg).empty());

    SimExecutor exec2(DeviceModel{}, store);
    auto scan = bptree_scan(store, cfg, 0, ~0ull, exec2, depth_opts(256));
    REQUIRE(scan.records.size() == records.size());
    CHECK(std::equal(scan.records.begin(), scan.records.end(), records.begin()));
}

TEST_CASE("bptree scan output is depth- and executor-invariant") {
    auto records = random_records(2000, 77);
    BPTreeConfig cfg;
    cfg.degree = 16;
    std::uint64_t lo = records[200].first;
    std::uint64_t hi = records[1500].first;

    std::vector<std::pair<std::uint64_t, std::uint64_t>> want;
    for (const auto& r : records)
        if (r.first >= lo && r.first <= hi) want.push_back(r);

    for (std::uint32_t depth : {0u, 1u, 4u, 16u, 256u}) {
        VirtualFileStore store;
        SimExecutor loader(DeviceModel{}, store);
        bptree_load(store, cfg, records, loader, depth_opts(0));
        SimExecutor exec(DeviceModel{}, store);
        auto scan = bptree_scan(store, cfg, lo, hi, exec, depth_opts(depth));
        CHECK(scan.records == want);
    }
}

TEST_CASE("bptree scan at depth 256 is faster than synchronous, same output") {
    auto records = random_records(3000, 31);
    BPTreeConfig cfg;
    cfg.degree = 16;
    auto run_at = [&](std::uint32_t depth) {
        VirtualFileStore store;
        SimExecutor loader(DeviceModel{}, store);
        bptree_load(store, cfg, records, loader, depth_opts(0));
        SimExecutor exec(DeviceModel{}, store);
        auto scan = bptree_scan(store, cfg, 0, ~0ull, exec, depth_opts(depth));
        return std::make_pair(scan.output_digest(), exec.now());
    };
    auto [d0, t0] = run_at(0);
    auto [d256, t256] = run_at(256);
    CHECK(d0 == d256);
    CHECK(t256 < t0);
}

TEST_CASE("bptree empty-range scan returns nothing") {
    auto records = random_records(500, 8);
    VirtualFileStore store;
    BPTreeConfig cfg;
    cfg.degree = 16;
    SimExecutor loader(DeviceModel{}, store);
    bptree_load(store, cfg, records, loader, depth_opts(0));
    SimExecutor exec(DeviceModel{}, store);
    // A range squeezed between two adjacent keys.
    std::uint64_t lo = records[100].first + 1;
    std::uint64_t hi = records[101].first - 1;
    REQUIRE(lo <= hi);
    auto scan = bptree_scan(store, cfg, lo, hi, exec, depth_opts(16));
    CHECK(scan.records.empty());
}

TEST_CASE("bptree load rejects unsorted input") {
    VirtualFileStore store;
    BPTreeConfig cfg;
    cfg.degree = 16;
    SimExecutor exec(DeviceModel{}, store);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> bad{{5, 1}, {3, 2}};
    CHECK_THROWS_AS(bptree_load(store, cfg, bad, exec, depth_opts(0)),
                    std::invalid_argument);
}

TEST_CASE("lsm get finds the newest value and exits early") {
    // Hand-built image: key 777 lives in the 3rd L0 table (a newer candidate)
    // and, with an older value, in level 1. Recency must win.
    VirtualFileStore store;
    LsmConfig cfg;
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> l0 = {
        {{100, 1}, {500, 2}, {900, 3}},          // oldest
        {{200, 4}, {700, 5}, {950, 6}},
        {{150, 7}, {777, 42}, {980, 8}},         // newest: has the key
    };
    std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>> levels = {
        {{{50, 9}, {777, 13}, {999, 10}}},       // level 1: stale value 13
    };
    write_lsm_image(store, cfg, {}, l0, levels);
    LsmDb db = open_lsm(store, cfg);

    SimExecutor exec(DeviceModel{}, store);
    auto r = lsm_get(store, db, 777, exec, depth_opts(8));
    REQUIRE(r.value.has_value());
    CHECK(*r.value == 42);
    CHECK(*r.value == *lsm_get_bruteforce(store, db, 777));
    // Newest L0 table is candidate #1, so one index+data pair suffices.
    CHECK(r.preads_harvested == 2);
    close_lsm(store, db);
}

TEST_CASE("lsm get served from the memtable issues no syscalls") {
    VirtualFileStore store;
    LsmConfig cfg;
    write_lsm_image(store, cfg, {{5, 55}}, {{{1, 1}, {9, 9}}}, {});
    LsmDb db = open_lsm(store, cfg);
    SimExecutor exec(DeviceModel{}, store);
    std::uint64_t before = exec.counters().prepared;
    auto r = lsm_get(store, db, 5, exec, depth_opts(16));
    REQUIRE(r.value.has_value());
    CHECK(*r.value == 55);
    CHECK(exec.counters().prepared == before);
    CHECK(exec.now() == 0);
    close_lsm(store, db);
}

TEST_CASE("lsm worst-case miss visits every candidate in a 12-19 shaped config") {
    // 8 overlapping L0 tables + 4 singleton levels: 12 candidates for a key
    // covered by every range.
    VirtualFileStore store;
    LsmConfig cfg;
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> l0;
    for (int t = 0; t < 8; ++t)
        l0.push_back({{10, static_cast<std::uint64_t>(t)},
                      {1000 + t, 1ull},
                      {5000, static_cast<std::uint64_t>(t)}});
    std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>> levels;
    for (int lv = 0; lv < 4; ++lv)
        levels.push_back({{{5, static_cast<std::uint64_t>(lv)}, {6000, 1ull}}});
    write_lsm_image(store, cfg, {}, l0, levels);
    LsmDb db = open_lsm(store, cfg);

    auto cands = lsm_candidates(db, 2500);
    CHECK(cands.size() == 12);
    CHECK(cands.size() >= 12);
    CHECK(cands.size() <= 19);

    SimExecutor exec(DeviceModel{}, store);
    auto r = lsm_get(store, db, 2500, exec, depth_opts(16));
    CHECK_FALSE(r.value.has_value());
    CHECK_FALSE(lsm_get_bruteforce(store, db, 2500).has_value());
    CHECK(r.preads_harvested == 24);  // index+data for all 12 candidates
    close_lsm(store, db);
}

TEST_CASE("lsm get equals brute force over randomized small instances") {
    Rng rng(0x15a);
    for (int round = 0; round < 12; ++round) {
        VirtualFileStore store;
        LsmConfig cfg;
        std::uint32_t l0_count = 1 + rng.below(8);
        std::uint32_t level_count = rng.below(5);
        constexpr std::uint64_t kSpace = 10000;

        auto make_table = [&](std::uint64_t lo, std::uint64_t hi, std::uint32_t n) {
            std::set<std::uint64_t> keys;
            while (keys.size() < n) keys.insert(lo + rng.below(hi - lo));
            std::vector<std::pair<std::uint64_t, std::uint64_t>> recs;
            for (auto k : keys) recs.emplace_back(k, rng.next());
            return recs;
        };
        std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> l0;
        for (std::uint32_t i = 0; i < l0_count; ++i)
            l0.push_back(make_table(0, kSpace, 1 + rng.below(60)));
        std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>> levels;
        for (std::uint32_t lv = 0; lv < level_count; ++lv) {
            std::uint32_t tables = 1 + rng.below(3);
            std::uint64_t stripe = kSpace / tables;
            std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> level;
            for (std::uint32_t t = 0; t < tables; ++t)
                level.push_back(
                    make_table(t * stripe, (t + 1) * stripe - 1, 1 + rng.below(60)));
            levels.push_back(std::move(level));
        }
        std::map<std::uint64_t, std::uint64_t> memtable;
        for (int i = 0; i < 5; ++i) memtable[rng.below(kSpace)] = rng.next();
        write_lsm_image(store, cfg, memtable, l0, levels);
        LsmDb db = open_lsm(store, cfg);

        SimExecutor exec(DeviceModel{}, store);
        for (int probe = 0; probe < 25; ++probe) {
            std::uint64_t key = rng.below(kSpace);
            auto want = lsm_get_bruteforce(store, db, key);
            auto got = lsm_get(store, db, key, exec, depth_opts(1 + rng.below(16)));
            CHECK(got.value == want);
        }
        close_lsm(store, db);
    }
}

TEST_CASE("workload outputs and stores match the synchronous run across the matrix") {
    // Output/state equality for every workload at several depths on both
    // executors; the full 20-seed sweep lives in the acceptance suite.
    auto stat_out = [](FileStore& store, Executor& exec, std::uint32_t depth) {
        StatLoopConfig cfg;
        cfg.entries = 40;
        return run_stat_loop(store, cfg, exec, depth_opts(depth)).output_digest();
    };
    auto copy_out = [](FileStore& store, Executor& exec, std::uint32_t depth) {
        CopyLoopConfig cfg;
        cfg.block_size = 8192;
        return run_copy_loop(store, cfg, exec, depth_opts(depth)).output_digest();
    };

    for (bool worker_pool : {false, true}) {
        for (std::uint32_t depth : {0u, 1u, 4u, 16u, 256u}) {
            // stat loop
            {
                VirtualFileStore ref_store, store;
                StatLoopConfig cfg;
                cfg.entries = 40;
                make_stat_fixture(ref_store, cfg, 5);
                make_stat_fixture(store, cfg, 5);
                SimExecutor ref_exec(DeviceModel{}, ref_store);
                Digest want = stat_out(ref_store, ref_exec, 0);
                std::unique_ptr<Executor> exec;
                if (worker_pool)
                    exec = std::make_unique<WorkerPoolExecutor>(store, 4);
                else
                    exec = std::make_unique<SimExecutor>(DeviceModel{}, store);
                CHECK(stat_out(store, *exec, depth) == want);
                CHECK(store.content_digest() == ref_store.content_digest());
            }
            // copy loop
            {
                VirtualFileStore ref_store, store;
                CopyLoopConfig cfg;
                cfg.block_size = 8192;
                make_copy_fixture(ref_store, cfg, 8192 * 9 + 100, 6);
                make_copy_fixture(store, cfg, 8192 * 9 + 100, 6);
                SimExecutor ref_exec(DeviceModel{}, ref_store);
                Digest want = copy_out(ref_store, ref_exec, 0);
                std::unique_ptr<Executor> exec;
                if (worker_pool)
                    exec = std::make_unique<WorkerPoolExecutor>(store, 4);
                else
                    exec = std::make_unique<SimExecutor>(DeviceModel{}, store);
                CHECK(copy_out(store, *exec, depth) == want);
                CHECK(store.content_digest() == ref_store.content_digest());
            }
        }
    }
}

TEST_CASE("copy loop over the real filesystem with the worker pool") {
    std::string root = "/tmp/foreaction_posix_copy_" + std::to_string(::getpid());
    PosixFileStore store(root);
    CopyLoopConfig cfg;
    cfg.block_size = 8192;
    make_copy_fixture(store, cfg, 5 * 8192 + 777, 21);
    WorkerPoolExecutor exec(store, 3);
    auto r = run_copy_loop(store, cfg, exec, depth_opts(6));
    CHECK(r.bytes_copied == 5 * 8192 + 777);
    CHECK(store.read_file(cfg.dest) == store.read_file(cfg.source));
    std::filesystem::remove_all(root);
}

TEST_CASE("stat loop over the real filesystem matches the virtual store run") {
    std::string root = "/tmp/foreaction_posix_stat_" + std::to_string(::getpid());
    PosixFileStore posix(root);
    VirtualFileStore virt;
    StatLoopConfig cfg;
    cfg.entries = 25;
    make_stat_fixture(posix, cfg, 31);
    make_stat_fixture(virt, cfg, 31);

    WorkerPoolExecutor posix_exec(posix, 4);
    SimExecutor virt_exec(DeviceModel{}, virt);
    auto a = run_stat_loop(posix, cfg, posix_exec, depth_opts(8));
    auto b = run_stat_loop(virt, cfg, virt_exec, depth_opts(8));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].first == b.records[i].first);
        // Sizes agree across backends; real mtimes/modes are theirs alone.
        CHECK(a.records[i].second.size == b.records[i].second.size);
    }
    std::filesystem::remove_all(root);
}
