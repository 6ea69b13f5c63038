#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "foreaction/syscall.hpp"

namespace foreaction {

// Substrate that syscall requests execute against. Implementations must be
// safe to call from multiple executor workers concurrently.
class FileStore {
public:
    virtual ~FileStore() = default;

    virtual SyscallCompletion execute(const SyscallRequest& req) = 0;

    // Fixture setup and inspection. Paths are '/'-separated, no leading '/'.
    virtual void put_file(const std::string& path, std::vector<std::byte> data,
                          std::uint64_t mtime) = 0;
    virtual void make_dir(const std::string& path) = 0;
    virtual std::vector<std::byte> read_file(const std::string& path) const = 0;
    virtual std::vector<std::string> list_dir(const std::string& path) const = 0;
    virtual Digest content_digest() const = 0;
};

// Deterministic in-memory filesystem: files, directories with sorted entry
// lists, and open handles carrying a cursor plus a directory snapshot.
class VirtualFileStore final : public FileStore {
public:
    VirtualFileStore() = default;

    SyscallCompletion execute(const SyscallRequest& req) override;

    void put_file(const std::string& path, std::vector<std::byte> data,
                  std::uint64_t mtime) override;
    void make_dir(const std::string& path) override;
    std::vector<std::byte> read_file(const std::string& path) const override;
    std::vector<std::string> list_dir(const std::string& path) const override;
    Digest content_digest() const override;

    // Reference implementation of a cursor-based read, used as the oracle for
    // the tell-pread-seek normalization.
    SyscallCompletion read_with_cursor(std::int32_t fd, std::uint64_t length,
                                       std::span<std::byte> dest);

    void truncate_file(const std::string& path, std::uint64_t new_size);
    bool exists(const std::string& path) const;
    std::uint64_t cursor_of(std::int32_t fd) const;

private:
    struct FileNode {
        std::vector<std::byte> data;
        std::uint64_t mtime = 0;
    };
    struct Handle {
        std::string path;
        std::uint64_t cursor = 0;
        std::uint32_t flags = kOpenRead;
        bool is_dir = false;
        std::vector<DirEntry> dir_snapshot;  // stable per open handle
    };

    SyscallCompletion execute_locked(const SyscallRequest& req);
    std::string parent_of(const std::string& path) const;
    void ensure_parents(const std::string& path);

    mutable std::mutex mu_;
    std::map<std::string, FileNode> files_;
    std::map<std::string, std::map<std::string, bool>> dirs_;  // dir -> name -> is_dir
    std::map<std::int32_t, Handle> handles_;
    std::int32_t next_fd_ = 3;
    std::uint64_t mtime_clock_ = 1;
};

}  // namespace foreaction
