#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "foreaction/device.hpp"
#include "foreaction/executor.hpp"
#include "foreaction/store.hpp"

namespace foreaction {

// Timing record for every entry the simulated device ran, for makespan and
// ordering assertions (e.g. a linked write must start after its read ends).
struct DeviceOp {
    EntryId id;
    SyscallType type = SyscallType::pread;
    std::uint64_t offset = 0;
    std::uint64_t bytes = 0;
    std::uint64_t ready = 0;  // submission time, or predecessor completion for chain members
    std::uint64_t start = 0;
    std::uint64_t completion = 0;
    std::uint32_t channel = 0;
};

// Deterministic executor over the virtual clock: single-threaded, no real
// concurrency. Entries are assigned to the earliest-free of P channels in
// (ready time, entry id) order; the clock advances only while the caller
// waits. Store effects apply when an entry is assigned, which preserves
// intra-chain ordering; concurrent conflicting non-pure entries are a graph
// bug the engine's purity rule prevents.
class SimExecutor final : public Executor {
public:
    SimExecutor(DeviceModel device, VirtualFileStore& store, std::size_t capacity = 1024);

    EntryId prepare(const SyscallRequest& req, bool link) override;
    std::size_t submit_all_prepared() override;
    SyscallCompletion wait_completion(EntryId id) override;
    std::optional<SyscallCompletion> try_peek(EntryId id) override;
    CancelResult cancel_outstanding() override;
    std::uint64_t now() const override { return now_; }
    void set_trace(TraceRecorder* recorder) override { trace_ = recorder; }
    Counters counters() const override { return counters_; }

    const std::vector<DeviceOp>& device_log() const { return device_log_; }
    const DeviceModel& device() const { return device_; }

private:
    struct Entry {
        EntryId id;
        SyscallRequest req;
        bool link = false;           // gate the next chain member on this one
        EntryId chain_next{0};       // 0 = none
        std::uint64_t ready = 0;
        bool gated = false;          // waiting on chain predecessor
    };

    void run_entry(Entry entry);
    void run_next_ready();
    void complete_cancelled(std::uint64_t id, std::uint64_t t);

    DeviceModel device_;
    VirtualFileStore& store_;
    std::size_t capacity_;
    TraceRecorder* trace_ = nullptr;

    std::uint64_t now_ = 0;
    std::uint64_t next_id_ = 1;
    std::uint64_t last_linked_ = 0;  // open chain tail awaiting a successor
    std::vector<Entry> staged_;
    // Ready pool ordered by (ready, id); gated chain members sit in pending_
    // until their predecessor finishes.
    std::set<std::pair<std::uint64_t, std::uint64_t>> ready_;
    std::map<std::uint64_t, Entry> pending_;
    std::map<std::uint64_t, SyscallCompletion> completions_;
    std::map<std::uint64_t, std::uint64_t> completion_time_;
    std::map<std::uint64_t, std::uint64_t> chain_next_;
    std::map<std::uint64_t, std::uint64_t> chain_pred_;
    std::map<std::uint64_t, bool> severs_result_;  // per finished entry
    std::vector<std::uint64_t> channel_free_;
    std::vector<DeviceOp> device_log_;
    Counters counters_;
};

}  // namespace foreaction
