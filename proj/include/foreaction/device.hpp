#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "foreaction/syscall.hpp"

namespace foreaction {

// Flat P-channel device: each op occupies one channel for a deterministic
// service time, base latency plus a bandwidth term for the transferred bytes.
// Defaults put a 4KB pread/pwrite at exactly 100 virtual microseconds and
// saturate throughput around 16 concurrent requests.
struct DeviceModel {
    std::uint32_t channels = 16;
    std::uint64_t bandwidth_bytes_per_us = 64;
    std::array<std::uint64_t, 8> base_us = {
        100,  // open_at
        50,   // close
        36,   // pread
        36,   // pwrite
        100,  // fstat_at
        100,  // getdents
        1,    // tell
        1,    // seek
    };

    std::uint64_t service_time(SyscallType t, std::uint64_t bytes) const;

    static DeviceModel parse_config(const std::string& text);
    static DeviceModel load_config_file(const std::string& path);
};

}  // namespace foreaction
