#include "foreaction/workloads/lsm.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace foreaction::workloads {

namespace {

constexpr std::size_t kRecordBytes = 16;   // key u64 + value u64
constexpr std::size_t kIndexEntryBytes = 24;  // first_key u64, offset u64, len u32, pad u32
constexpr std::size_t kFooterBytes = 32;   // index_off, index_len, min_key, max_key

void put_u32(std::byte* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
void put_u64(std::byte* p, std::uint64_t v) { std::memcpy(p, &v, 8); }
std::uint32_t get_u32(const std::byte* p) { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
std::uint64_t get_u64(const std::byte* p) { std::uint64_t v; std::memcpy(&v, p, 8); return v; }

std::vector<std::byte> direct_read(FileStore& store, std::int32_t fd, std::uint64_t off,
                                   std::uint64_t len) {
    std::vector<std::byte> buf(static_cast<std::size_t>(len));
    SyscallRequest r;
    r.type = SyscallType::pread;
    r.fd = fd;
    r.offset = off;
    r.length = len;
    r.dest = buf;
    SyscallCompletion c = store.execute(r);
    if (c.rc < 0) throw std::runtime_error("lsm: pread failed");
    buf.resize(static_cast<std::size_t>(c.rc));
    return buf;
}

}  // namespace

std::vector<std::byte> render_table(
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& records,
    std::uint32_t block_size) {
    if (records.empty()) throw std::invalid_argument("render_table: empty table");
    const std::size_t per_block = block_size / kRecordBytes;
    std::vector<std::byte> out;
    struct Block {
        std::uint64_t first_key;
        std::uint64_t offset;
        std::uint32_t length;
    };
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < records.size(); i += per_block) {
        std::size_t e = std::min(records.size(), i + per_block);
        Block b;
        b.first_key = records[i].first;
        b.offset = out.size();
        b.length = static_cast<std::uint32_t>((e - i) * kRecordBytes);
        std::size_t at = out.size();
        out.resize(at + b.length);
        for (std::size_t j = i; j < e; ++j) {
            put_u64(out.data() + at, records[j].first);
            put_u64(out.data() + at + 8, records[j].second);
            at += kRecordBytes;
        }
        blocks.push_back(b);
    }
    std::uint64_t index_off = out.size();
    out.resize(out.size() + blocks.size() * kIndexEntryBytes);
    std::byte* p = out.data() + index_off;
    for (const Block& b : blocks) {
        put_u64(p, b.first_key);
        put_u64(p + 8, b.offset);
        put_u32(p + 16, b.length);
        put_u32(p + 20, 0);
        p += kIndexEntryBytes;
    }
    std::uint64_t index_len = blocks.size() * kIndexEntryBytes;
    std::size_t at = out.size();
    out.resize(at + kFooterBytes);
    put_u64(out.data() + at, index_off);
    put_u64(out.data() + at + 8, index_len);
    put_u64(out.data() + at + 16, records.front().first);
    put_u64(out.data() + at + 24, records.back().first);
    return out;
}

std::optional<BlockRef> index_find_block(std::span<const std::byte> index, std::uint64_t key) {
    std::size_t entries = index.size() / kIndexEntryBytes;
    if (entries == 0) return std::nullopt;
    // Last block whose first key is <= key.
    std::size_t lo = 0, hi = entries;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (get_u64(index.data() + mid * kIndexEntryBytes) <= key) lo = mid;
        else hi = mid;
    }
    if (get_u64(index.data() + lo * kIndexEntryBytes) > key) return std::nullopt;
    BlockRef b;
    b.offset = get_u64(index.data() + lo * kIndexEntryBytes + 8);
    b.length = get_u32(index.data() + lo * kIndexEntryBytes + 16);
    return b;
}

std::optional<std::uint64_t> block_find_value(std::span<const std::byte> block,
                                              std::uint64_t key) {
    std::size_t n = block.size() / kRecordBytes;
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        std::uint64_t k = get_u64(block.data() + mid * kRecordBytes);
        if (k == key) return get_u64(block.data() + mid * kRecordBytes + 8);
        if (k < key) lo = mid + 1;
        else hi = mid;
    }
    return std::nullopt;
}

void write_lsm_image(
    FileStore& store, const LsmConfig& cfg,
    const std::map<std::uint64_t, std::uint64_t>& memtable,
    const std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>& l0_tables,
    const std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>>&
        level_tables) {
    store.make_dir(cfg.dir);
    std::ostringstream manifest;
    for (const auto& [k, v] : memtable) manifest << "mem " << k << ' ' << v << '\n';
    std::uint64_t mtime = 1;
    for (std::size_t i = 0; i < l0_tables.size(); ++i) {
        std::string name = "l0_" + std::to_string(i) + ".tab";
        store.put_file(cfg.dir + "/" + name, render_table(l0_tables[i], cfg.block_size),
                       mtime++);
        manifest << "l0 " << name << '\n';
    }
    for (std::size_t lv = 0; lv < level_tables.size(); ++lv) {
        for (std::size_t i = 0; i < level_tables[lv].size(); ++i) {
            std::string name =
                "l" + std::to_string(lv + 1) + "_" + std::to_string(i) + ".tab";
            store.put_file(cfg.dir + "/" + name,
                           render_table(level_tables[lv][i], cfg.block_size), mtime++);
            manifest << "level " << (lv + 1) << ' ' << name << '\n';
        }
    }
    std::string text = manifest.str();
    std::vector<std::byte> bytes(text.size());
    std::memcpy(bytes.data(), text.data(), text.size());
    store.put_file(cfg.dir + "/MANIFEST", std::move(bytes), mtime);
}

LsmDb open_lsm(FileStore& store, const LsmConfig& cfg) {
    LsmDb db;
    db.config = cfg;
    auto manifest_bytes = store.read_file(cfg.dir + "/MANIFEST");
    std::string text(reinterpret_cast<const char*>(manifest_bytes.data()),
                     manifest_bytes.size());
    std::istringstream in(text);
    std::string word;
    std::vector<std::pair<int, std::string>> files;  // level (-0 for l0), name
    while (in >> word) {
        if (word == "mem") {
            std::uint64_t k, v;
            in >> k >> v;
            db.memtable[k] = v;
        } else if (word == "l0") {
            std::string name;
            in >> name;
            files.emplace_back(0, name);
        } else if (word == "level") {
            int lv;
            std::string name;
            in >> lv >> name;
            files.emplace_back(lv, name);
        } else {
            throw std::runtime_error("lsm: bad manifest line starting '" + word + "'");
        }
    }

    for (const auto& [lv, name] : files) {
        TableMeta t;
        t.path = cfg.dir + "/" + name;
        SyscallRequest open_req;
        open_req.type = SyscallType::open_at;
        open_req.path = t.path;
        std::int64_t rc = store.execute(open_req).rc;
        if (rc < 0) throw std::runtime_error("lsm: cannot open " + t.path);
        t.fd = static_cast<std::int32_t>(rc);

        SyscallRequest stat_req;
        stat_req.type = SyscallType::fstat_at;
        stat_req.path = t.path;
        std::uint64_t size = std::get<StatRecord>(store.execute(stat_req).payload).size;
        auto footer = direct_read(store, t.fd, size - kFooterBytes, kFooterBytes);
        t.index_off = get_u64(footer.data());
        t.index_len = get_u64(footer.data() + 8);
        t.min_key = get_u64(footer.data() + 16);
        t.max_key = get_u64(footer.data() + 24);

        if (lv == 0) {
            db.l0.push_back(std::move(t));
        } else {
            if (db.levels.size() < static_cast<std::size_t>(lv))
                db.levels.resize(static_cast<std::size_t>(lv));
            db.levels[static_cast<std::size_t>(lv) - 1].push_back(std::move(t));
        }
    }
    for (auto& level : db.levels)
        std::sort(level.begin(), level.end(),
                  [](const TableMeta& a, const TableMeta& b) { return a.min_key < b.min_key; });
    return db;
}

void close_lsm(FileStore& store, LsmDb& db) {
    auto close_one = [&](TableMeta& t) {
        if (t.fd < 0) return;
        SyscallRequest r;
        r.type = SyscallType::close;
        r.fd = t.fd;
        store.execute(r);
        t.fd = -1;
    };
    for (auto& t : db.l0) close_one(t);
    for (auto& level : db.levels)
        for (auto& t : level) close_one(t);
}

std::vector<const TableMeta*> lsm_candidates(const LsmDb& db, std::uint64_t key) {
    std::vector<const TableMeta*> out;
    for (auto it = db.l0.rbegin(); it != db.l0.rend(); ++it)
        if (key >= it->min_key && key <= it->max_key) out.push_back(&*it);
    for (const auto& level : db.levels) {
        std::size_t lo = 0, hi = level.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (level[mid].max_key < key) lo = mid + 1;
            else hi = mid;
        }
        if (lo < level.size() && key >= level[lo].min_key && key <= level[lo].max_key)
            out.push_back(&level[lo]);
    }
    return out;
}

LsmGetResult lsm_get(FileStore& store, LsmDb& db, std::uint64_t key, Executor& executor,
                     const SessionOptions& options) {
    (void)store;  // tables are pre-opened; all I/O flows through the executor
    LsmGetResult out;
    if (auto it = db.memtable.find(key); it != db.memtable.end()) {
        out.value = it->second;
        return out;
    }
    std::vector<const TableMeta*> cands = lsm_candidates(db, key);
    out.candidates = cands.size();
    if (cands.empty()) return out;
    const std::uint64_t count = cands.size();

    struct PluginState {
        Session* session = nullptr;
    } state;

    auto graph = std::make_shared<ForeactionGraph>("lsm-get");
    NodeRef idx_node = graph->add_syscall_node(
        "pread_index", SyscallType::pread,
        [&cands, count](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= count) return r;
            const TableMeta* t = cands[e[0]];
            r.ready = true;
            r.args.type = SyscallType::pread;
            r.args.fd = t->fd;
            r.args.offset = t->index_off;
            r.args.length = t->index_len;
            return r;
        },
        SaveResultHook{});
    NodeRef data_node = graph->add_syscall_node(
        "pread_data", SyscallType::pread,
        [&state, &cands, key, count](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= count || !state.session) return r;
            // Index lookup: only possible once the index pread finished.
            auto bytes = state.session->instance_bytes("pread_index", e);
            if (!bytes) return r;
            auto block = index_find_block(*bytes, key);
            if (!block) return r;
            r.ready = true;
            r.args.type = SyscallType::pread;
            r.args.fd = cands[e[0]]->fd;
            r.args.offset = block->offset;
            r.args.length = block->length;
            return r;
        },
        SaveResultHook{});
    NodeRef more = graph->add_branch_node("more", [count](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = (e[0] + 1 < count) ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), idx_node);
    graph->set_next(idx_node, data_node);
    // The application may return early out of this edge when the key matches.
    graph->set_next(data_node, more, /*weak=*/!db.config.mutate_unmark_weak);
    graph->branch_append_child(more, idx_node, /*loop_back=*/true);
    graph->branch_append_child(more, graph->end());
    if (!graph->validate().empty())
        throw std::runtime_error("lsm get graph failed validation");

    InputVarSet inputs;
    inputs.set("key", key).set("candidates", count);
    Session session(graph, std::move(inputs), options, executor);
    state.session = &session;

    std::vector<std::byte> index_buf;
    std::vector<std::byte> block_buf;
    for (std::uint64_t e = 0; e < count; ++e) {
        const TableMeta* t = cands[e];
        index_buf.resize(static_cast<std::size_t>(t->index_len));

        SyscallRequest ri;
        ri.type = SyscallType::pread;
        ri.fd = t->fd;
        ri.offset = t->index_off;
        ri.length = t->index_len;
        ri.dest = index_buf;
        session.intercept(ri);
        out.preads_harvested++;

        auto block = index_find_block(index_buf, key);
        // Covering candidates always yield a block: the first block's first
        // key is the table's min key.
        if (!block) throw std::runtime_error("lsm: candidate without a covering block");
        block_buf.resize(block->length);

        SyscallRequest rd;
        rd.type = SyscallType::pread;
        rd.fd = t->fd;
        rd.offset = block->offset;
        rd.length = block->length;
        rd.dest = block_buf;
        session.intercept(rd);
        out.preads_harvested++;

        if (auto v = block_find_value(block_buf, key)) {
            out.value = v;  // newest candidate wins; stop searching
            break;
        }
    }
    out.stats = session.finish(out.output_digest());
    return out;
}

}  // namespace foreaction::workloads
