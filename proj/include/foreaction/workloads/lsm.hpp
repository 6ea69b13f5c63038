#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foreaction/engine.hpp"
#include "foreaction/store.hpp"

namespace foreaction::workloads {

// Sorted-table store: an in-memory table, overlapping level-0 table files
// (newest first wins), and lower levels with disjoint key ranges. Each table
// file holds fixed-size data blocks of (key, value) pairs, an index block
// mapping first-keys to block extents, and a footer locating the index.
struct LsmConfig {
    std::string dir = "db";
    std::uint32_t block_size = 4096;
    // Fault injection for mutation tests: drop the weak edge after pread_data.
    bool mutate_unmark_weak = false;
};

struct TableMeta {
    std::string path;
    std::int32_t fd = -1;
    std::uint64_t min_key = 0;
    std::uint64_t max_key = 0;
    std::uint64_t index_off = 0;
    std::uint64_t index_len = 0;
};

struct LsmDb {
    LsmConfig config;
    std::map<std::uint64_t, std::uint64_t> memtable;
    std::vector<TableMeta> l0;                    // oldest first; search newest first
    std::vector<std::vector<TableMeta>> levels;   // levels[i] = level i+1, disjoint ranges
};

struct LsmGetResult {
    std::optional<std::uint64_t> value;
    std::uint64_t candidates = 0;
    std::uint64_t preads_harvested = 0;
    SessionStats stats;

    Digest output_digest() const {
        Digest d;
        d.mix_u64(value.has_value() ? 1 : 0).mix_u64(value.value_or(0));
        return d;
    }
};

// Table file construction and the index lookup shared by the graph's Compute
// hook and the application path.
std::vector<std::byte> render_table(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& records,
                                    std::uint32_t block_size);

struct BlockRef {
    std::uint64_t offset = 0;
    std::uint32_t length = 0;
};
std::optional<BlockRef> index_find_block(std::span<const std::byte> index, std::uint64_t key);
std::optional<std::uint64_t> block_find_value(std::span<const std::byte> block,
                                              std::uint64_t key);

// Writes table files plus the MANIFEST the open path reads.
void write_lsm_image(FileStore& store, const LsmConfig& cfg,
                     const std::map<std::uint64_t, std::uint64_t>& memtable,
                     const std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>& l0_tables,
                     const std::vector<std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>>& level_tables);

// Loads the manifest, reads footers, and pre-opens every table.
LsmDb open_lsm(FileStore& store, const LsmConfig& cfg);
void close_lsm(FileStore& store, LsmDb& db);

// Candidate tables for a key: covering L0 tables newest to oldest, then at
// most one table per lower level.
std::vector<const TableMeta*> lsm_candidates(const LsmDb& db, std::uint64_t key);

LsmGetResult lsm_get(FileStore& store, LsmDb& db, std::uint64_t key, Executor& executor,
                     const SessionOptions& options);

}  // namespace foreaction::workloads
