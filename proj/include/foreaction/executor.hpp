#pragma once

#include <cstdint>
#include <stdexcept>

#include "foreaction/trace.hpp"

namespace foreaction {

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EntryId {
    std::uint64_t value = 0;
    friend bool operator==(const EntryId&, const EntryId&) = default;
};

struct CancelResult {
    std::size_t cancelled = 0;  // removed before starting, no effects happened
    std::size_t drained = 0;    // already executing or done; results discarded
    std::size_t total() const { return cancelled + drained; }
};

// Asynchronous syscall backend: a staging area, batched submission, and a
// completion side the caller waits on. prepare(link=true) chains the entry
// with the next prepared one; a chain entry failing (negative rc or short
// transfer) completes the rest of its chain as cancelled.
//
// prepare/submit/wait/cancel are called only from the owning session's
// thread. Completions may be produced concurrently; implementations provide
// the happens-before edge between producing and observing them.
class Executor {
public:
    virtual ~Executor() = default;

    virtual EntryId prepare(const SyscallRequest& req, bool link) = 0;
    virtual std::size_t submit_all_prepared() = 0;
    virtual SyscallCompletion wait_completion(EntryId id) = 0;
    // Non-blocking, non-consuming: completion if already observable.
    virtual std::optional<SyscallCompletion> try_peek(EntryId id) = 0;
    virtual CancelResult cancel_outstanding() = 0;

    // Virtual microseconds for the simulated executor, a logical event
    // counter for thread-backed ones. Used for trace timestamps.
    virtual std::uint64_t now() const = 0;

    virtual void set_trace(TraceRecorder* recorder) = 0;

    // Lifetime accounting; at shutdown prepared == completed + cancelled.
    struct Counters {
        std::uint64_t prepared = 0;
        std::uint64_t completed = 0;
        std::uint64_t cancelled = 0;
    };
    virtual Counters counters() const = 0;
};

}  // namespace foreaction
