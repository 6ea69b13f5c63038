#pragma once

#include <mutex>
#include <string>

#include "foreaction/store.hpp"

namespace foreaction {

// Backend over a real directory tree. Requests resolve against root/path;
// cursors and directory snapshots are tracked here so tell/seek/getdents
// behave identically to the virtual store.
class PosixFileStore final : public FileStore {
public:
    explicit PosixFileStore(std::string root);

    SyscallCompletion execute(const SyscallRequest& req) override;

    void put_file(const std::string& path, std::vector<std::byte> data,
                  std::uint64_t mtime) override;
    void make_dir(const std::string& path) override;
    std::vector<std::byte> read_file(const std::string& path) const override;
    std::vector<std::string> list_dir(const std::string& path) const override;
    // Hashes paths and file contents only; real mtimes are not reproducible.
    Digest content_digest() const override;

private:
    struct Handle {
        int fd = -1;
        std::uint64_t cursor = 0;
        std::uint32_t flags = kOpenRead;
        bool is_dir = false;
        std::vector<DirEntry> dir_snapshot;
    };

    std::string full(const std::string& path) const;

    std::string root_;
    mutable std::mutex mu_;
    std::map<std::int32_t, Handle> handles_;
    std::int32_t next_fd_ = 3;
};

}  // namespace foreaction
