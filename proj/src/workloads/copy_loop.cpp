#include "foreaction/workloads/copy_loop.hpp"

#include <stdexcept>

#include "foreaction/workloads/fixtures.hpp"

namespace foreaction::workloads {

void make_copy_fixture(FileStore& store, const CopyLoopConfig& cfg, std::uint64_t file_size,
                       std::uint64_t seed) {
    Rng rng(seed);
    store.put_file(cfg.source, random_bytes(rng, file_size), rng.below(1u << 30));
}

CopyLoopResult run_copy_loop(FileStore& store, const CopyLoopConfig& cfg, Executor& executor,
                             const SessionOptions& options) {
    SyscallRequest open_src;
    open_src.type = SyscallType::open_at;
    open_src.path = cfg.source;
    std::int32_t fd_src = static_cast<std::int32_t>(store.execute(open_src).rc);
    if (fd_src < 0) throw std::runtime_error("copy loop: cannot open source");

    SyscallRequest stat_src;
    stat_src.type = SyscallType::fstat_at;
    stat_src.path = cfg.source;
    SyscallCompletion st = store.execute(stat_src);
    std::uint64_t size = std::get<StatRecord>(st.payload).size;

    SyscallRequest open_dst;
    open_dst.type = SyscallType::open_at;
    open_dst.path = cfg.dest;
    open_dst.flags = kOpenWrite | kOpenCreate | kOpenTrunc;
    std::int32_t fd_dst = static_cast<std::int32_t>(store.execute(open_dst).rc);
    if (fd_dst < 0) throw std::runtime_error("copy loop: cannot open destination");

    const std::uint64_t block = cfg.block_size;
    const std::uint64_t blocks = (size + block - 1) / block;

    struct PluginState {
        Session* session = nullptr;
    } state;

    auto graph = std::make_shared<ForeactionGraph>("copy-loop");
    NodeRef read_node = graph->add_syscall_node(
        "read", SyscallType::pread,
        [fd_src, size, block, blocks, link = !cfg.mutate_unlink_pairs](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= blocks) return r;
            r.ready = true;
            r.link = link;
            r.args.type = SyscallType::pread;
            r.args.fd = fd_src;
            r.args.offset = e[0] * block;
            r.args.length = std::min(block, size - r.args.offset);
            return r;
        },
        // Harvest does nothing: the linked write consumes the buffer as-is.
        SaveResultHook{});
    NodeRef write_node = graph->add_syscall_node(
        "write", SyscallType::pwrite,
        [&state, fd_dst, size, block, blocks](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= blocks || !state.session) return r;
            std::span<const std::byte> buf = state.session->instance_buffer("read", e);
            if (buf.empty()) return r;
            std::uint64_t len = std::min(block, size - e[0] * block);
            r.ready = true;
            r.args.type = SyscallType::pwrite;
            r.args.fd = fd_dst;
            r.args.offset = e[0] * block;
            r.args.payload = buf.first(static_cast<std::size_t>(len));
            return r;
        },
        SaveResultHook{});
    NodeRef more = graph->add_branch_node("more", [blocks](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = (e[0] + 1 < blocks) ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), read_node);
    graph->set_next(read_node, write_node);
    graph->set_next(write_node, more);
    graph->branch_append_child(more, read_node, /*loop_back=*/true);
    graph->branch_append_child(more, graph->end());
    if (!graph->validate().empty())
        throw std::runtime_error("copy loop graph failed validation");

    InputVarSet inputs;
    inputs.set("source", cfg.source).set("dest", cfg.dest).set("size", size);
    Session session(graph, std::move(inputs), options, executor);
    state.session = &session;

    CopyLoopResult out;
    out.blocks = blocks;
    std::vector<std::byte> buf(static_cast<std::size_t>(block));
    for (std::uint64_t e = 0; e < blocks; ++e) {
        std::uint64_t off = e * block;
        std::uint64_t len = std::min(block, size - off);

        SyscallRequest rd;
        rd.type = SyscallType::pread;
        rd.fd = fd_src;
        rd.offset = off;
        rd.length = len;
        rd.dest = std::span<std::byte>(buf.data(), static_cast<std::size_t>(len));
        SyscallCompletion rc = session.intercept(rd);
        std::uint64_t got = rc.rc > 0 ? static_cast<std::uint64_t>(rc.rc) : 0;

        SyscallRequest wr;
        wr.type = SyscallType::pwrite;
        wr.fd = fd_dst;
        wr.offset = off;
        wr.payload = std::span<const std::byte>(buf.data(), static_cast<std::size_t>(got));
        SyscallCompletion wc = session.intercept(wr);
        if (wc.rc > 0) out.bytes_copied += static_cast<std::uint64_t>(wc.rc);
    }
    out.stats = session.finish(out.output_digest());

    SyscallRequest close_req;
    close_req.type = SyscallType::close;
    close_req.fd = fd_src;
    store.execute(close_req);
    close_req.fd = fd_dst;
    store.execute(close_req);
    return out;
}

}  // namespace foreaction::workloads
