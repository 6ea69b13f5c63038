#include "foreaction/workloads/stat_loop.hpp"

#include "foreaction/workloads/fixtures.hpp"

namespace foreaction::workloads {

Digest StatLoopResult::output_digest() const {
    Digest d;
    d.mix_u64(records.size());
    for (const auto& [rc, st] : records) {
        d.mix_i64(rc);
        d.mix_u64(st.size).mix_u64(st.mode).mix_u64(st.mtime).mix_u64(st.is_dir);
    }
    return d;
}

void make_stat_fixture(FileStore& store, const StatLoopConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    store.make_dir(cfg.directory);
    for (std::uint64_t i = 0; i < cfg.entries; ++i) {
        std::uint64_t size = rng.below(4096);
        store.put_file(cfg.directory + "/" + entry_name(i), random_bytes(rng, size),
                       rng.below(1u << 30));
    }
}

StatLoopResult run_stat_loop(FileStore& store, const StatLoopConfig& cfg, Executor& executor,
                             const SessionOptions& options) {
    std::vector<std::string> paths;
    for (const auto& name : store.list_dir(cfg.directory))
        paths.push_back(cfg.directory + "/" + name);
    for (const auto& name : cfg.phantom_entries)
        paths.push_back(cfg.directory + "/" + name);
    const std::uint64_t n = paths.size();

    // Per-entry buffers the Harvest action fills in.
    std::vector<std::int64_t> harvested_rcs(n, 0);
    std::vector<StatRecord> harvested_records(n);

    auto graph = std::make_shared<ForeactionGraph>("stat-loop");
    NodeRef stat_node = graph->add_syscall_node(
        "fstat", SyscallType::fstat_at,
        [&paths, n](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= n) return r;
            r.ready = true;
            r.args.type = SyscallType::fstat_at;
            r.args.path = paths[e[0]];
            return r;
        },
        [&harvested_rcs, &harvested_records, n](const EpochVector& e, std::int64_t rc,
                                                const CompletionPayload& payload) {
            if (e[0] >= n) return;
            harvested_rcs[e[0]] = rc;
            if (const auto* st = std::get_if<StatRecord>(&payload))
                harvested_records[e[0]] = *st;
        });
    std::uint64_t limit = cfg.mutate_wrong_choice && n > 1 ? n - 1 : n;
    NodeRef more = graph->add_branch_node("more", [limit](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = (e[0] + 1 < limit) ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), stat_node);
    graph->set_next(stat_node, more);
    graph->branch_append_child(more, stat_node, /*loop_back=*/true);
    graph->branch_append_child(more, graph->end());
    if (!graph->validate().empty())
        throw std::runtime_error("stat loop graph failed validation");

    InputVarSet inputs;
    inputs.set("directory", cfg.directory).set("entries", n);
    Session session(graph, std::move(inputs), options, executor);

    StatLoopResult out;
    out.records.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        SyscallRequest req;
        req.type = SyscallType::fstat_at;
        req.path = paths[i];
        SyscallCompletion c = session.intercept(req);
        StatRecord st{};
        if (const auto* s = std::get_if<StatRecord>(&c.payload)) st = *s;
        out.records.emplace_back(c.rc, st);
    }
    out.stats = session.finish(out.output_digest());
    return out;
}

}  // namespace foreaction::workloads
