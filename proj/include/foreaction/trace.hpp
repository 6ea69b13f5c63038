#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "foreaction/syscall.hpp"

namespace foreaction {

enum class TraceKind : std::uint8_t { non_pure_exec, harvest, app_return };

const char* to_string(TraceKind k);

// One externally relevant effect. non_pure_exec events are recorded by the
// executor when the backend actually performs the call; submit_seq preserves
// the order the engine committed them, which is the order the synchrony check
// compares (completion order of independent entries is legitimately free).
struct TraceEvent {
    std::uint64_t seq = 0;
    TraceKind kind = TraceKind::harvest;
    SyscallType type = SyscallType::pread;
    std::uint64_t submit_seq = 0;
    Digest args;
    Digest payload;
    std::uint64_t time = 0;

    std::string to_line() const;
    static std::optional<TraceEvent> from_line(const std::string& line);
};

using Trace = std::vector<TraceEvent>;

std::string serialize_trace(const Trace& t);
Trace parse_trace(const std::string& text);

// Thread-safe sink; executor workers and the session thread both append.
class TraceRecorder {
public:
    void record(TraceKind kind, SyscallType type, std::uint64_t submit_seq, Digest args,
                Digest payload, std::uint64_t time) {
        std::lock_guard lk(mu_);
        events_.push_back(TraceEvent{next_seq_++, kind, type, submit_seq, args, payload, time});
    }
    Trace take() {
        std::lock_guard lk(mu_);
        return std::move(events_);
    }
    const Trace& events() const { return events_; }

private:
    std::mutex mu_;
    Trace events_;
    std::uint64_t next_seq_ = 0;
};

// Everything a run leaves behind that the synchrony oracle can compare.
struct RunArtifacts {
    Digest output;
    Digest store;
    Trace trace;
};

struct SynchronyVerdict {
    bool equivalent = true;
    std::size_t divergence_index = 0;
    std::string expected;
    std::string actual;
};

// Equivalent iff (a) non-pure event sequences, in canonical order, match in
// type/args/payload, (b) application outputs match, (c) final store digests
// match. Pure-call timing and ordering differences are permitted, as is
// reordering among independent non-pure entries (their interleaving is free
// on any asynchronous backend; effects that do not commute show up in (c)).
SynchronyVerdict check_equivalence(const RunArtifacts& reference, const RunArtifacts& speculative);

}  // namespace foreaction
