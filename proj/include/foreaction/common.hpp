#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace foreaction {

// 64-bit content digest used for trace comparison and golden values.
// FNV-1a: stable across platforms, cheap, good enough for differencing runs.
struct Digest {
    std::uint64_t value = 14695981039346656037ull;

    Digest& mix(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            value ^= p[i];
            value *= 1099511628211ull;
        }
        return *this;
    }
    Digest& mix_u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (i * 8));
        return mix(buf, 8);
    }
    Digest& mix_i64(std::int64_t v) { return mix_u64(static_cast<std::uint64_t>(v)); }
    Digest& mix_str(std::string_view s) {
        mix_u64(s.size());
        return mix(s.data(), s.size());
    }
    Digest& mix_bytes(std::span<const std::byte> b) {
        mix_u64(b.size());
        return mix(b.data(), b.size());
    }

    friend bool operator==(const Digest&, const Digest&) = default;
};

std::string to_hex(Digest d);
bool parse_hex_digest(std::string_view s, Digest& out);

// SplitMix64: self-contained deterministic generator for fixtures, so seeds
// produce identical data regardless of the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // Uniform in [0, bound). Modulo bias is irrelevant at fixture scale.
    std::uint64_t below(std::uint64_t bound) { return bound ? next() % bound : 0; }
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {  // inclusive lo, exclusive hi
        return lo + below(hi - lo);
    }
    bool chance(std::uint32_t num, std::uint32_t den) { return below(den) < num; }

private:
    std::uint64_t state_;
};

}  // namespace foreaction
