#include "foreaction/workloads/fixtures.hpp"

#include <algorithm>
#include <set>

namespace foreaction::workloads {

std::vector<std::byte> random_bytes(Rng& rng, std::size_t n) {
    std::vector<std::byte> out(n);
    std::size_t i = 0;
    while (i + 8 <= n) {
        std::uint64_t v = rng.next();
        for (int b = 0; b < 8; ++b) out[i++] = static_cast<std::byte>(v >> (b * 8));
    }
    while (i < n) out[i++] = static_cast<std::byte>(rng.next());
    return out;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> random_records(std::uint64_t count,
                                                                    std::uint64_t seed) {
    Rng rng(seed);
    std::set<std::uint64_t> keys;
    while (keys.size() < count) keys.insert(rng.next() >> 1);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> recs;
    recs.reserve(count);
    for (std::uint64_t k : keys) recs.emplace_back(k, rng.next());
    return recs;
}

std::string entry_name(std::uint64_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%06llu", static_cast<unsigned long long>(index));
    return buf;
}

}  // namespace foreaction::workloads
