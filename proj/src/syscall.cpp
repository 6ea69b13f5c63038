#include "foreaction/syscall.hpp"

#include <stdexcept>

namespace foreaction {

std::string to_hex(Digest d) {
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[d.value & 0xf];
        d.value >>= 4;
    }
    return out;
}

bool parse_hex_digest(std::string_view s, Digest& out) {
    if (s.size() != 16) return false;
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else return false;
    }
    out.value = v;
    return true;
}

const char* to_string(SyscallType t) {
    switch (t) {
        case SyscallType::open_at: return "open_at";
        case SyscallType::close: return "close";
        case SyscallType::pread: return "pread";
        case SyscallType::pwrite: return "pwrite";
        case SyscallType::fstat_at: return "fstat_at";
        case SyscallType::getdents: return "getdents";
        case SyscallType::tell: return "tell";
        case SyscallType::seek: return "seek";
    }
    return "?";
}

std::optional<SyscallType> syscall_type_from_string(std::string_view name) {
    for (auto t : {SyscallType::open_at, SyscallType::close, SyscallType::pread,
                   SyscallType::pwrite, SyscallType::fstat_at, SyscallType::getdents,
                   SyscallType::tell, SyscallType::seek}) {
        if (name == to_string(t)) return t;
    }
    return std::nullopt;
}

Purity classify(SyscallType t) {
    switch (t) {
        case SyscallType::open_at:
        case SyscallType::pread:
        case SyscallType::fstat_at:
        case SyscallType::getdents:
        case SyscallType::tell:
        case SyscallType::seek:
            return Purity::pure;
        case SyscallType::pwrite:
        case SyscallType::close:
            return Purity::non_pure;
    }
    throw std::invalid_argument("unknown syscall type");
}

Purity classify(const SyscallRequest& req) {
    if (req.type == SyscallType::open_at &&
        (req.flags & (kOpenCreate | kOpenTrunc)) != 0) {
        return Purity::non_pure;
    }
    return classify(req.type);
}

bool is_read_like(SyscallType t) {
    return t == SyscallType::pread || t == SyscallType::fstat_at ||
           t == SyscallType::getdents || t == SyscallType::tell;
}

Digest request_digest(const SyscallRequest& req) {
    Digest d;
    d.mix_u64(static_cast<std::uint64_t>(req.type));
    switch (req.type) {
        case SyscallType::open_at:
            d.mix_str(req.path).mix_u64(req.flags);
            break;
        case SyscallType::close:
        case SyscallType::tell:
            d.mix_i64(req.fd);
            break;
        case SyscallType::pread:
        case SyscallType::getdents:
            d.mix_i64(req.fd).mix_u64(req.offset).mix_u64(req.length);
            break;
        case SyscallType::pwrite:
            d.mix_i64(req.fd).mix_u64(req.offset).mix_bytes(req.payload);
            break;
        case SyscallType::fstat_at:
            d.mix_str(req.path);
            break;
        case SyscallType::seek:
            d.mix_i64(req.fd).mix_u64(req.offset);
            break;
    }
    return d;
}

Digest payload_digest(const SyscallCompletion& c, std::span<const std::byte> read_bytes) {
    Digest d;
    d.mix_i64(c.rc);
    d.mix_u64(c.status == CompletionStatus::cancelled ? 1 : 0);
    if (const auto* st = std::get_if<StatRecord>(&c.payload)) {
        d.mix_u64(st->size).mix_u64(st->mode).mix_u64(st->mtime).mix_u64(st->is_dir);
    } else if (const auto* ents = std::get_if<std::vector<DirEntry>>(&c.payload)) {
        d.mix_u64(ents->size());
        for (const auto& e : *ents) d.mix_str(e.name).mix_u64(e.is_dir);
    }
    d.mix_bytes(read_bytes);
    return d;
}

NormalizedRead normalize_implicit_read(std::int32_t fd, std::uint64_t length,
                                       std::span<std::byte> dest, std::uint64_t cursor) {
    NormalizedRead n;
    n.cursor = cursor;
    n.tell.type = SyscallType::tell;
    n.tell.fd = fd;
    n.pread.type = SyscallType::pread;
    n.pread.fd = fd;
    n.pread.offset = cursor;
    n.pread.length = length;
    n.pread.dest = dest;
    return n;
}

}  // namespace foreaction
