#include <doctest.h>
#include <cstdio>
#include <fstream>
#include <unistd.h>

#include "foreaction/device.hpp"

using namespace foreaction;

TEST_CASE("default calibration puts a 4KB transfer at 100 virtual us") {
    DeviceModel m;
    CHECK(m.service_time(SyscallType::pread, 4096) == 100);
    CHECK(m.service_time(SyscallType::pwrite, 4096) == 100);
    CHECK(m.service_time(SyscallType::fstat_at, 0) == 100);
    CHECK(m.channels == 16);
}

TEST_CASE("service time is positive for every op") {
    DeviceModel m;
    m.base_us.fill(0);
    for (auto t : {SyscallType::open_at, SyscallType::close, SyscallType::pread,
                   SyscallType::pwrite, SyscallType::fstat_at, SyscallType::getdents,
                   SyscallType::tell, SyscallType::seek}) {
        CHECK(m.service_time(t, 0) >= 1);
    }
}

TEST_CASE("transfer term rounds up to whole microseconds") {
    DeviceModel m;
    m.bandwidth_bytes_per_us = 64;
    CHECK(m.service_time(SyscallType::pread, 1) == m.base_us[2] + 1);
    CHECK(m.service_time(SyscallType::pread, 65) == m.base_us[2] + 2);
}

TEST_CASE("device config parsing") {
    SUBCASE("valid config with comments") {
        auto m = DeviceModel::parse_config(
            "# device knobs\n"
            "channels = 4\n"
            "bandwidth_bytes_per_us = 128\n"
            "base_pread_us = 50\n"
            "base_fstat_at_us = 10\n");
        CHECK(m.channels == 4);
        CHECK(m.bandwidth_bytes_per_us == 128);
        CHECK(m.service_time(SyscallType::pread, 128) == 51);
        CHECK(m.service_time(SyscallType::fstat_at, 0) == 10);
    }
    SUBCASE("unknown key is rejected") {
        CHECK_THROWS(DeviceModel::parse_config("chanels = 4\n"));
    }
    SUBCASE("unknown op is rejected") {
        CHECK_THROWS(DeviceModel::parse_config("base_mmap_us = 4\n"));
    }
    SUBCASE("zero channels is rejected") {
        CHECK_THROWS(DeviceModel::parse_config("channels = 0\n"));
    }
    SUBCASE("missing equals sign is rejected") {
        CHECK_THROWS(DeviceModel::parse_config("channels 4\n"));
    }
}

TEST_CASE("device config loads from a file") {
    std::string path = "/tmp/foreaction_device_cfg_" + std::to_string(::getpid());
    {
        std::ofstream f(path);
        f << "channels=8\nbase_pread_us = 5\n";
    }
    auto m = foreaction::DeviceModel::load_config_file(path);
    CHECK(m.channels == 8);
    CHECK(m.service_time(foreaction::SyscallType::pread, 64) == 6);
    std::remove(path.c_str());
    CHECK_THROWS(foreaction::DeviceModel::load_config_file(path));
}
