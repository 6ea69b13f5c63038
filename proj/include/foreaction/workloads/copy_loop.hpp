#pragma once

#include <string>

#include "foreaction/engine.hpp"
#include "foreaction/store.hpp"

namespace foreaction::workloads {

// Block copy: each iteration reads a source block and writes it to the
// destination. Read and write are submitted as a linked pair so the write
// runs only after its read completed; the read's Harvest does nothing and
// the write consumes the read's internal buffer directly.
struct CopyLoopConfig {
    std::string source = "src.bin";
    std::string dest = "dst.bin";
    std::uint64_t block_size = 128 * 1024;
    // Fault injection for mutation tests: drop the read-write link.
    bool mutate_unlink_pairs = false;
};

struct CopyLoopResult {
    std::uint64_t bytes_copied = 0;
    std::uint64_t blocks = 0;
    SessionStats stats;

    Digest output_digest() const {
        Digest d;
        d.mix_u64(bytes_copied).mix_u64(blocks);
        return d;
    }
};

void make_copy_fixture(FileStore& store, const CopyLoopConfig& cfg, std::uint64_t file_size,
                       std::uint64_t seed);

CopyLoopResult run_copy_loop(FileStore& store, const CopyLoopConfig& cfg, Executor& executor,
                             const SessionOptions& options);

}  // namespace foreaction::workloads
