#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "foreaction/executor.hpp"
#include "foreaction/store.hpp"

namespace foreaction {

// Portable backend: blocking syscalls delegated to a pool of worker threads.
// A link chain becomes one task executed serially by a single worker;
// independent entries run as single-entry tasks and may complete in any
// order. Completions are published through a mutex-protected map, which is
// the happens-before edge the session relies on.
class WorkerPoolExecutor final : public Executor {
public:
    WorkerPoolExecutor(FileStore& store, std::size_t workers, std::size_t capacity = 1024);
    ~WorkerPoolExecutor() override;

    EntryId prepare(const SyscallRequest& req, bool link) override;
    std::size_t submit_all_prepared() override;
    SyscallCompletion wait_completion(EntryId id) override;
    std::optional<SyscallCompletion> try_peek(EntryId id) override;
    CancelResult cancel_outstanding() override;
    std::uint64_t now() const override;
    void set_trace(TraceRecorder* recorder) override;
    Counters counters() const override;

    std::size_t worker_count() const { return workers_.size(); }

    static std::size_t default_workers(std::uint32_t depth);

private:
    struct Entry {
        std::uint64_t id = 0;
        SyscallRequest req;
        bool link = false;
        std::uint64_t pred = 0;  // chain predecessor, 0 if none
    };
    struct Task {
        std::vector<Entry> entries;
        std::uint64_t gate_pred = 0;  // entry id this chain continuation waits on
    };

    void worker_loop();
    void run_task_locked(std::unique_lock<std::mutex>& lk, Task task);
    void publish_locked(const Entry& e, SyscallCompletion c);
    void cancel_entries_locked(const std::vector<Entry>& entries, std::size_t from);

    FileStore& store_;
    std::size_t capacity_;

    mutable std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    bool stop_ = false;
    std::uint64_t next_id_ = 1;
    std::uint64_t logical_time_ = 0;
    std::uint64_t last_linked_ = 0;
    std::vector<Entry> staged_;
    std::deque<Task> queue_;
    std::map<std::uint64_t, Task> gated_;          // pred entry id -> continuation
    std::map<std::uint64_t, bool> severs_result_;  // finished entry -> severed?
    std::map<std::uint64_t, SyscallCompletion> completions_;
    std::size_t running_ = 0;
    Counters counters_;
    TraceRecorder* trace_ = nullptr;

    std::vector<std::thread> workers_;
};

}  // namespace foreaction
