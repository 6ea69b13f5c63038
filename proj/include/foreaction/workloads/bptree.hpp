#pragma once

#include <string>
#include <utility>
#include <vector>

#include "foreaction/engine.hpp"
#include "foreaction/store.hpp"

namespace foreaction::workloads {

// Paged B+-tree in one backing file. Fixed-size pages hold sorted keys plus
// values (leaves) or child page ids (internal nodes), and the page id of the
// right sibling. Page 0 is the meta page; node pages start at 1.
struct BPTreeConfig {
    std::string file = "tree.db";
    std::uint32_t page_size = 8192;
    std::uint32_t degree = 510;  // keys per node; at most (page_size-16)/16
};

struct BPTreeLoadResult {
    std::uint64_t leaf_pages = 0;
    std::uint64_t total_pages = 0;
    std::uint32_t height = 0;
    SessionStats stats;

    Digest output_digest() const {
        Digest d;
        d.mix_u64(leaf_pages).mix_u64(total_pages).mix_u64(height);
        return d;
    }
};

struct BPTreeScanResult {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> records;
    SessionStats stats;

    Digest output_digest() const {
        Digest d;
        d.mix_u64(records.size());
        for (const auto& [k, v] : records) d.mix_u64(k).mix_u64(v);
        return d;
    }
};

// Bulk-load from a sorted record stream; the leaf-page write loop is the
// speculated region. Rejects unsorted input.
BPTreeLoadResult bptree_load(FileStore& store, const BPTreeConfig& cfg,
                             const std::vector<std::pair<std::uint64_t, std::uint64_t>>& records,
                             Executor& executor, const SessionOptions& options);

// Range scan: candidate leaf ids are gathered from the last internal level
// up front, then the leaf-page read loop is the speculated region.
BPTreeScanResult bptree_scan(FileStore& store, const BPTreeConfig& cfg, std::uint64_t lo,
                             std::uint64_t hi, Executor& executor,
                             const SessionOptions& options);

// Structural checks over the stored tree: sorted keys per node, uniform leaf
// depth, sibling chain covering the leaves in key order.
std::vector<std::string> bptree_check(FileStore& store, const BPTreeConfig& cfg);

}  // namespace foreaction::workloads
