#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "foreaction/common.hpp"
#include "foreaction/store.hpp"

namespace foreaction::workloads {

std::vector<std::byte> random_bytes(Rng& rng, std::size_t n);

// Sorted, strictly increasing (key, value) pairs.
std::vector<std::pair<std::uint64_t, std::uint64_t>> random_records(std::uint64_t count,
                                                                    std::uint64_t seed);

std::string entry_name(std::uint64_t index);

}  // namespace foreaction::workloads
