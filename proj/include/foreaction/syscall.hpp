#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "foreaction/common.hpp"

namespace foreaction {

// Supported syscall vocabulary. tell/seek exist only as artifacts of
// normalizing cursor-based reads into explicit-offset form.
enum class SyscallType : std::uint8_t {
    open_at,
    close,
    pread,
    pwrite,
    fstat_at,
    getdents,
    tell,
    seek,
};

enum class Purity : std::uint8_t { pure, non_pure };

enum OpenFlags : std::uint32_t {
    kOpenRead = 0,
    kOpenWrite = 1u << 0,
    kOpenCreate = 1u << 1,
    kOpenTrunc = 1u << 2,
};

struct StatRecord {
    std::uint64_t size = 0;
    std::uint32_t mode = 0;
    std::uint64_t mtime = 0;
    bool is_dir = false;

    friend bool operator==(const StatRecord&, const StatRecord&) = default;
};

struct DirEntry {
    std::string name;
    bool is_dir = false;

    friend bool operator==(const DirEntry&, const DirEntry&) = default;
};

// One typed syscall description: the currency between engine and executor.
// Field use per type:
//   open_at:  path, flags
//   close:    fd
//   pread:    fd, offset, length, dest (bytes land in dest; may be smaller
//             than length when the caller does not need the data)
//   pwrite:   fd, offset, payload
//   fstat_at: path (record comes back in the completion payload)
//   getdents: fd, offset (entry position), length (max entries)
//   tell:     fd
//   seek:     fd, offset (absolute target)
struct SyscallRequest {
    SyscallType type = SyscallType::pread;
    std::int32_t fd = -1;
    std::string path;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::span<std::byte> dest;
    std::span<const std::byte> payload;
    std::uint32_t flags = kOpenRead;
};

using CompletionPayload =
    std::variant<std::monostate, StatRecord, std::vector<DirEntry>>;

enum class CompletionStatus : std::uint8_t { ok, cancelled };

// rc follows kernel conventions: byte/entry count or new fd on success,
// negative errno on failure.
struct SyscallCompletion {
    std::int64_t rc = 0;
    CompletionStatus status = CompletionStatus::ok;
    CompletionPayload payload;

    bool cancelled() const { return status == CompletionStatus::cancelled; }
};

const char* to_string(SyscallType t);
std::optional<SyscallType> syscall_type_from_string(std::string_view name);

// Type-level classification. open_at is pure at type level; request-level
// classification below refines it for create/truncate flags.
Purity classify(SyscallType t);
Purity classify(const SyscallRequest& req);

bool is_read_like(SyscallType t);

// Semantic digest of a request. Destination buffers are excluded (their
// location is an implementation detail); pwrite payload is digested by
// content, so call this only once the payload bytes are final.
Digest request_digest(const SyscallRequest& req);
Digest payload_digest(const SyscallCompletion& c, std::span<const std::byte> read_bytes);

// A cursor-based read rewritten as an explicit-offset triple. The seek target
// depends on the read's return count, so it is materialized via seek_for().
struct NormalizedRead {
    SyscallRequest tell;
    SyscallRequest pread;
    std::uint64_t cursor = 0;

    SyscallRequest seek_for(std::int64_t pread_rc) const {
        SyscallRequest s;
        s.type = SyscallType::seek;
        s.fd = pread.fd;
        s.offset = cursor + static_cast<std::uint64_t>(pread_rc < 0 ? 0 : pread_rc);
        return s;
    }
};

NormalizedRead normalize_implicit_read(std::int32_t fd, std::uint64_t length,
                                       std::span<std::byte> dest, std::uint64_t cursor);

}  // namespace foreaction
