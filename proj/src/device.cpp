#include "foreaction/device.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace foreaction {

std::uint64_t DeviceModel::service_time(SyscallType t, std::uint64_t bytes) const {
    std::uint64_t base = base_us[static_cast<std::size_t>(t)];
    std::uint64_t xfer = 0;
    if (bytes > 0 && bandwidth_bytes_per_us > 0)
        xfer = (bytes + bandwidth_bytes_per_us - 1) / bandwidth_bytes_per_us;
    std::uint64_t svc = base + xfer;
    return svc == 0 ? 1 : svc;  // service time is always positive
}

DeviceModel DeviceModel::parse_config(const std::string& text) {
    DeviceModel m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("device config line " + std::to_string(lineno) +
                                     ": expected key=value");
        auto trim = [](std::string s) {
            auto b2 = s.find_first_not_of(" \t");
            auto e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string{} : s.substr(b2, e2 - b2 + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::uint64_t value = std::stoull(trim(line.substr(eq + 1)));
        if (key == "channels") {
            if (value == 0) throw std::runtime_error("channels must be positive");
            m.channels = static_cast<std::uint32_t>(value);
        } else if (key == "bandwidth_bytes_per_us") {
            m.bandwidth_bytes_per_us = value;
        } else if (key.rfind("base_", 0) == 0 && key.size() > 8 &&
                   key.compare(key.size() - 3, 3, "_us") == 0) {
            std::string op = key.substr(5, key.size() - 8);
            auto t = syscall_type_from_string(op);
            if (!t) throw std::runtime_error("device config: unknown op '" + op + "'");
            m.base_us[static_cast<std::size_t>(*t)] = value;
        } else {
            throw std::runtime_error("device config: unknown key '" + key + "'");
        }
    }
    return m;
}

DeviceModel DeviceModel::load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open device config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace foreaction
