#include "foreaction/workloads/bptree.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace foreaction::workloads {

namespace {

constexpr std::uint16_t kLeaf = 1;
constexpr std::uint16_t kInternal = 2;
constexpr std::uint64_t kMetaMagic = 0x62707472ee000001ull;

void put_u16(std::byte* p, std::uint16_t v) { std::memcpy(p, &v, 2); }
void put_u32(std::byte* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
void put_u64(std::byte* p, std::uint64_t v) { std::memcpy(p, &v, 8); }
std::uint16_t get_u16(const std::byte* p) { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
std::uint32_t get_u32(const std::byte* p) { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
std::uint64_t get_u64(const std::byte* p) { std::uint64_t v; std::memcpy(&v, p, 8); return v; }

// Page layout: kind u16, count u16, reserved u32, right_sibling u64,
// keys[degree] u64, slots[degree] u64 (values or child page ids).
struct PageView {
    std::uint16_t kind = 0;
    std::uint16_t count = 0;
    std::uint64_t right_sibling = 0;
    std::vector<std::uint64_t> keys;
    std::vector<std::uint64_t> slots;
};

PageView parse_page(std::span<const std::byte> page, std::uint32_t degree) {
    PageView v;
    v.kind = get_u16(page.data());
    v.count = get_u16(page.data() + 2);
    v.right_sibling = get_u64(page.data() + 8);
    v.keys.resize(v.count);
    v.slots.resize(v.count);
    for (std::uint16_t i = 0; i < v.count; ++i) {
        v.keys[i] = get_u64(page.data() + 16 + 8 * i);
        v.slots[i] = get_u64(page.data() + 16 + 8 * degree + 8 * i);
    }
    return v;
}

std::vector<std::byte> render_page(std::uint16_t kind, std::uint64_t right_sibling,
                                   const std::vector<std::uint64_t>& keys,
                                   const std::vector<std::uint64_t>& slots,
                                   std::uint32_t page_size, std::uint32_t degree) {
    std::vector<std::byte> page(page_size);
    put_u16(page.data(), kind);
    put_u16(page.data() + 2, static_cast<std::uint16_t>(keys.size()));
    put_u32(page.data() + 4, 0);
    put_u64(page.data() + 8, right_sibling);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        put_u64(page.data() + 16 + 8 * i, keys[i]);
        put_u64(page.data() + 16 + 8 * degree + 8 * i, slots[i]);
    }
    return page;
}

struct Meta {
    std::uint32_t degree = 0;
    std::uint32_t height = 0;
    std::uint64_t root = 0;
    std::uint64_t first_leaf = 0;
    std::uint64_t page_count = 0;
};

std::vector<std::byte> render_meta(const Meta& m, std::uint32_t page_size) {
    std::vector<std::byte> page(page_size);
    put_u64(page.data(), kMetaMagic);
    put_u32(page.data() + 8, m.degree);
    put_u32(page.data() + 12, m.height);
    put_u64(page.data() + 16, m.root);
    put_u64(page.data() + 24, m.first_leaf);
    put_u64(page.data() + 32, m.page_count);
    return page;
}

Meta parse_meta(std::span<const std::byte> page) {
    if (get_u64(page.data()) != kMetaMagic)
        throw std::runtime_error("bptree: bad meta page");
    Meta m;
    m.degree = get_u32(page.data() + 8);
    m.height = get_u32(page.data() + 12);
    m.root = get_u64(page.data() + 16);
    m.first_leaf = get_u64(page.data() + 24);
    m.page_count = get_u64(page.data() + 32);
    return m;
}

void check_degree(const BPTreeConfig& cfg) {
    std::uint32_t max_degree = (cfg.page_size - 16) / 16;
    if (cfg.degree == 0 || cfg.degree > max_degree || cfg.degree > 510)
        throw std::runtime_error("bptree: degree out of range");
}

std::vector<std::byte> direct_pread(FileStore& store, std::int32_t fd, std::uint64_t off,
                                    std::uint64_t len) {
    std::vector<std::byte> buf(static_cast<std::size_t>(len));
    SyscallRequest r;
    r.type = SyscallType::pread;
    r.fd = fd;
    r.offset = off;
    r.length = len;
    r.dest = buf;
    SyscallCompletion c = store.execute(r);
    if (c.rc < 0) throw std::runtime_error("bptree: pread failed");
    return buf;
}

void direct_pwrite(FileStore& store, std::int32_t fd, std::uint64_t off,
                   std::span<const std::byte> payload) {
    SyscallRequest r;
    r.type = SyscallType::pwrite;
    r.fd = fd;
    r.offset = off;
    r.payload = payload;
    if (store.execute(r).rc < 0) throw std::runtime_error("bptree: pwrite failed");
}

std::int32_t direct_open(FileStore& store, const std::string& path, std::uint32_t flags) {
    SyscallRequest r;
    r.type = SyscallType::open_at;
    r.path = path;
    r.flags = flags;
    std::int64_t rc = store.execute(r).rc;
    if (rc < 0) throw std::runtime_error("bptree: cannot open " + path);
    return static_cast<std::int32_t>(rc);
}

void direct_close(FileStore& store, std::int32_t fd) {
    SyscallRequest r;
    r.type = SyscallType::close;
    r.fd = fd;
    store.execute(r);
}

}  // namespace

BPTreeLoadResult bptree_load(FileStore& store, const BPTreeConfig& cfg,
                             const std::vector<std::pair<std::uint64_t, std::uint64_t>>& records,
                             Executor& executor, const SessionOptions& options) {
    check_degree(cfg);
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].first <= records[i - 1].first)
            throw std::invalid_argument("bptree_load: input must be sorted by key");

    std::int32_t fd = direct_open(store, cfg.file, kOpenWrite | kOpenCreate | kOpenTrunc);

    // Materialize every leaf image up front: filling the right-most leaf from
    // a sorted stream degenerates into chunking, and having all images ready
    // lets the write loop speculate freely.
    const std::uint64_t n = records.size();
    const std::uint64_t leaves = n == 0 ? 0 : (n + cfg.degree - 1) / cfg.degree;
    std::vector<std::vector<std::byte>> leaf_images;
    std::vector<std::uint64_t> leaf_first_key;
    leaf_images.reserve(leaves);
    for (std::uint64_t l = 0; l < leaves; ++l) {
        std::uint64_t b = l * cfg.degree;
        std::uint64_t e = std::min<std::uint64_t>(n, b + cfg.degree);
        std::vector<std::uint64_t> keys, vals;
        for (std::uint64_t i = b; i < e; ++i) {
            keys.push_back(records[i].first);
            vals.push_back(records[i].second);
        }
        std::uint64_t sibling = (l + 1 < leaves) ? (l + 2) : 0;  // leaf pages are 1..leaves
        leaf_images.push_back(
            render_page(kLeaf, sibling, keys, vals, cfg.page_size, cfg.degree));
        leaf_first_key.push_back(keys.front());
    }

    auto graph = std::make_shared<ForeactionGraph>("bptree-load");
    NodeRef write_node = graph->add_syscall_node(
        "write_leaf", SyscallType::pwrite,
        [&leaf_images, fd, page_size = cfg.page_size, leaves](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= leaves) return r;
            r.ready = true;
            r.args.type = SyscallType::pwrite;
            r.args.fd = fd;
            r.args.offset = (e[0] + 1) * page_size;
            r.args.payload = leaf_images[e[0]];
            return r;
        },
        SaveResultHook{});
    NodeRef more = graph->add_branch_node("more", [leaves](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = (e[0] + 1 < leaves) ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), write_node);
    graph->set_next(write_node, more);
    graph->branch_append_child(more, write_node, /*loop_back=*/true);
    graph->branch_append_child(more, graph->end());
    if (!graph->validate().empty())
        throw std::runtime_error("bptree load graph failed validation");

    BPTreeLoadResult out;
    out.leaf_pages = leaves;

    SessionStats stats;
    if (leaves > 0) {
        InputVarSet inputs;
        inputs.set("file", cfg.file).set("leaves", leaves);
        Session session(graph, std::move(inputs), options, executor);
        for (std::uint64_t l = 0; l < leaves; ++l) {
            SyscallRequest wr;
            wr.type = SyscallType::pwrite;
            wr.fd = fd;
            wr.offset = (l + 1) * cfg.page_size;
            wr.payload = leaf_images[l];
            session.intercept(wr);
        }
        stats = session.finish(out.output_digest());
    }

    // Internal levels, built bottom-up and written outside the wrapped loop.
    std::uint64_t next_page = leaves + 1;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> level;  // (first key, page id)
    for (std::uint64_t l = 0; l < leaves; ++l) level.emplace_back(leaf_first_key[l], l + 1);
    std::uint32_t height = leaves > 0 ? 1 : 0;
    while (level.size() > 1) {
        ++height;
        std::vector<std::pair<std::uint64_t, std::uint64_t>> parent;
        std::uint64_t groups = (level.size() + cfg.degree - 1) / cfg.degree;
        std::vector<std::uint64_t> page_ids(groups);
        for (std::uint64_t g = 0; g < groups; ++g) page_ids[g] = next_page++;
        for (std::uint64_t g = 0; g < groups; ++g) {
            std::uint64_t b = g * cfg.degree;
            std::uint64_t e = std::min<std::uint64_t>(level.size(), b + cfg.degree);
            std::vector<std::uint64_t> keys, children;
            for (std::uint64_t i = b; i < e; ++i) {
                keys.push_back(level[i].first);
                children.push_back(level[i].second);
            }
            std::uint64_t sibling = (g + 1 < groups) ? page_ids[g + 1] : 0;
            auto img = render_page(kInternal, sibling, keys, children, cfg.page_size,
                                   cfg.degree);
            direct_pwrite(store, fd, page_ids[g] * cfg.page_size, img);
            parent.emplace_back(keys.front(), page_ids[g]);
        }
        level = std::move(parent);
    }

    Meta meta;
    meta.degree = cfg.degree;
    meta.height = height;
    meta.root = level.empty() ? 0 : level.front().second;
    meta.first_leaf = leaves > 0 ? 1 : 0;
    meta.page_count = next_page;
    direct_pwrite(store, fd, 0, render_meta(meta, cfg.page_size));
    direct_close(store, fd);

    out.total_pages = next_page;
    out.height = height;
    out.stats = stats;
    return out;
}

BPTreeScanResult bptree_scan(FileStore& store, const BPTreeConfig& cfg, std::uint64_t lo,
                             std::uint64_t hi, Executor& executor,
                             const SessionOptions& options) {
    check_degree(cfg);
    std::int32_t fd = direct_open(store, cfg.file, kOpenRead);
    Meta meta = parse_meta(direct_pread(store, fd, 0, cfg.page_size));

    BPTreeScanResult out;
    if (meta.root == 0 || lo > hi) {
        direct_close(store, fd);
        return out;
    }

    // Gather candidate leaf ids from the last internal level before issuing
    // any leaf reads. Individual descent steps are strict pointer chasing and
    // run as ordinary reads.
    std::vector<std::uint64_t> candidates;
    if (meta.height == 1) {
        candidates.push_back(meta.root);
    } else {
        std::uint64_t page_id = meta.root;
        for (std::uint32_t depth = 1; depth + 1 < meta.height; ++depth) {
            PageView v = parse_page(direct_pread(store, fd, page_id * cfg.page_size,
                                                 cfg.page_size),
                                    cfg.degree);
            std::size_t pick = 0;
            while (pick + 1 < v.keys.size() && v.keys[pick + 1] <= lo) ++pick;
            page_id = v.slots[pick];
        }
        // page_id is now the left-most last-level internal page overlapping lo.
        while (page_id != 0) {
            PageView v = parse_page(direct_pread(store, fd, page_id * cfg.page_size,
                                                 cfg.page_size),
                                    cfg.degree);
            bool past_hi = false;
            for (std::size_t i = 0; i < v.keys.size(); ++i) {
                if (v.keys[i] > hi) {
                    past_hi = true;
                    break;
                }
                bool child_may_overlap =
                    (i + 1 == v.keys.size()) || v.keys[i + 1] > lo;
                if (child_may_overlap) candidates.push_back(v.slots[i]);
            }
            if (past_hi) break;
            page_id = v.right_sibling;
        }
    }

    const std::uint64_t count = candidates.size();
    auto graph = std::make_shared<ForeactionGraph>("bptree-scan");
    NodeRef read_node = graph->add_syscall_node(
        "read_leaf", SyscallType::pread,
        [&candidates, fd, page_size = cfg.page_size, count](const EpochVector& e) {
            ArgsResult r;
            if (e[0] >= count) return r;
            r.ready = true;
            r.args.type = SyscallType::pread;
            r.args.fd = fd;
            r.args.offset = candidates[e[0]] * page_size;
            r.args.length = page_size;
            return r;
        },
        SaveResultHook{});
    NodeRef more = graph->add_branch_node("more", [count](const EpochVector& e) {
        ChoiceResult c;
        c.ready = true;
        c.child = (e[0] + 1 < count) ? 0 : 1;
        return c;
    });
    graph->set_next(graph->start(), read_node);
    graph->set_next(read_node, more);
    graph->branch_append_child(more, read_node, /*loop_back=*/true);
    graph->branch_append_child(more, graph->end());
    if (!graph->validate().empty())
        throw std::runtime_error("bptree scan graph failed validation");

    if (count > 0) {
        InputVarSet inputs;
        inputs.set("file", cfg.file).set("lo", lo).set("hi", hi);
        Session session(graph, std::move(inputs), options, executor);
        std::vector<std::byte> page(cfg.page_size);
        for (std::uint64_t e = 0; e < count; ++e) {
            SyscallRequest rd;
            rd.type = SyscallType::pread;
            rd.fd = fd;
            rd.offset = candidates[e] * cfg.page_size;
            rd.length = cfg.page_size;
            rd.dest = page;
            session.intercept(rd);
            PageView v = parse_page(page, cfg.degree);
            for (std::uint16_t i = 0; i < v.count; ++i)
                if (v.keys[i] >= lo && v.keys[i] <= hi)
                    out.records.emplace_back(v.keys[i], v.slots[i]);
        }
        out.stats = session.finish(out.output_digest());
    }
    direct_close(store, fd);
    return out;
}

std::vector<std::string> bptree_check(FileStore& store, const BPTreeConfig& cfg) {
    std::vector<std::string> problems;
    std::int32_t fd = direct_open(store, cfg.file, kOpenRead);
    Meta meta = parse_meta(direct_pread(store, fd, 0, cfg.page_size));
    if (meta.root == 0) {
        direct_close(store, fd);
        return problems;
    }

    // Depth-first: leaves must sit at uniform depth with sorted keys.
    std::vector<std::uint64_t> leaves_in_tree_order;
    struct Item {
        std::uint64_t page;
        std::uint32_t depth;
    };
    std::vector<Item> stack{{meta.root, 1}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        PageView v = parse_page(direct_pread(store, fd, it.page * cfg.page_size,
                                             cfg.page_size),
                                cfg.degree);
        if (!std::is_sorted(v.keys.begin(), v.keys.end()))
            problems.push_back("unsorted keys in page " + std::to_string(it.page));
        if (v.kind == kLeaf) {
            if (it.depth != meta.height)
                problems.push_back("leaf " + std::to_string(it.page) + " at depth " +
                                   std::to_string(it.depth));
            leaves_in_tree_order.push_back(it.page);
        } else {
            for (std::size_t i = v.slots.size(); i > 0; --i)
                stack.push_back({v.slots[i - 1], it.depth + 1});
        }
    }

    // Sibling chain must enumerate the same leaves in the same order.
    std::vector<std::uint64_t> chain;
    std::uint64_t cur = meta.first_leaf;
    std::uint64_t prev_last_key = 0;
    bool have_prev = false;
    while (cur != 0) {
        PageView v = parse_page(direct_pread(store, fd, cur * cfg.page_size, cfg.page_size),
                                cfg.degree);
        if (v.kind != kLeaf) {
            problems.push_back("sibling chain hits non-leaf page " + std::to_string(cur));
            break;
        }
        if (have_prev && v.count > 0 && v.keys.front() <= prev_last_key)
            problems.push_back("sibling chain out of key order at page " + std::to_string(cur));
        if (v.count > 0) {
            prev_last_key = v.keys.back();
            have_prev = true;
        }
        chain.push_back(cur);
        cur = v.right_sibling;
    }
    if (chain != leaves_in_tree_order)
        problems.push_back("sibling chain does not match tree-order leaves");

    direct_close(store, fd);
    return problems;
}

}  // namespace foreaction::workloads
