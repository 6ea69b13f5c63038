#include "foreaction/store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace foreaction {

namespace {

SyscallCompletion fail(int err) {
    SyscallCompletion c;
    c.rc = -err;
    return c;
}

}  // namespace

std::string VirtualFileStore::parent_of(const std::string& path) const {
    auto pos = path.rfind('/');
    if (pos == std::string::npos) return "";
    return path.substr(0, pos);
}

void VirtualFileStore::ensure_parents(const std::string& path) {
    // Registers path's ancestors as directories and links child entries.
    std::string cur = path;
    while (true) {
        std::string parent = parent_of(cur);
        std::string name = cur.substr(parent.empty() ? 0 : parent.size() + 1);
        bool child_is_dir = dirs_.count(cur) > 0;
        dirs_[parent][name] = child_is_dir;
        if (parent.empty()) break;
        dirs_.emplace(parent, std::map<std::string, bool>{});
        cur = parent;
    }
}

void VirtualFileStore::put_file(const std::string& path, std::vector<std::byte> data,
                                std::uint64_t mtime) {
    std::lock_guard lk(mu_);
    files_[path] = FileNode{std::move(data), mtime};
    ensure_parents(path);
}

void VirtualFileStore::make_dir(const std::string& path) {
    std::lock_guard lk(mu_);
    dirs_.emplace(path, std::map<std::string, bool>{});
    ensure_parents(path);
}

std::vector<std::byte> VirtualFileStore::read_file(const std::string& path) const {
    std::lock_guard lk(mu_);
    auto it = files_.find(path);
    if (it == files_.end()) throw std::runtime_error("no such file: " + path);
    return it->second.data;
}

std::vector<std::string> VirtualFileStore::list_dir(const std::string& path) const {
    std::lock_guard lk(mu_);
    auto it = dirs_.find(path);
    if (it == dirs_.end()) throw std::runtime_error("no such directory: " + path);
    std::vector<std::string> names;
    names.reserve(it->second.size());
    for (const auto& [name, is_dir] : it->second) names.push_back(name);
    return names;
}

bool VirtualFileStore::exists(const std::string& path) const {
    std::lock_guard lk(mu_);
    return files_.count(path) > 0 || dirs_.count(path) > 0;
}

std::uint64_t VirtualFileStore::cursor_of(std::int32_t fd) const {
    std::lock_guard lk(mu_);
    auto it = handles_.find(fd);
    if (it == handles_.end()) throw std::runtime_error("bad fd");
    return it->second.cursor;
}

void VirtualFileStore::truncate_file(const std::string& path, std::uint64_t new_size) {
    std::lock_guard lk(mu_);
    auto it = files_.find(path);
    if (it == files_.end()) throw std::runtime_error("no such file: " + path);
    it->second.data.resize(new_size);
    it->second.mtime = mtime_clock_++;
}

Digest VirtualFileStore::content_digest() const {
    std::lock_guard lk(mu_);
    Digest d;
    d.mix_u64(files_.size());
    for (const auto& [path, node] : files_) {
        d.mix_str(path);
        d.mix_bytes(node.data);
        d.mix_u64(node.mtime);
    }
    d.mix_u64(dirs_.size());
    for (const auto& [path, entries] : dirs_) {
        d.mix_str(path);
        for (const auto& [name, is_dir] : entries) d.mix_str(name).mix_u64(is_dir);
    }
    return d;
}

SyscallCompletion VirtualFileStore::execute(const SyscallRequest& req) {
    std::lock_guard lk(mu_);
    return execute_locked(req);
}

SyscallCompletion VirtualFileStore::execute_locked(const SyscallRequest& req) {
    SyscallCompletion c;
    switch (req.type) {
        case SyscallType::open_at: {
            bool is_file = files_.count(req.path) > 0;
            bool is_dir = dirs_.count(req.path) > 0;
            if (!is_file && !is_dir) {
                if ((req.flags & kOpenCreate) == 0) return fail(ENOENT);
                files_[req.path] = FileNode{{}, mtime_clock_++};
                ensure_parents(req.path);
                is_file = true;
            }
            if (is_file && (req.flags & kOpenTrunc) && (req.flags & kOpenWrite)) {
                files_[req.path].data.clear();
                files_[req.path].mtime = mtime_clock_++;
            }
            Handle h;
            h.path = req.path;
            h.flags = req.flags;
            h.is_dir = is_dir && !is_file;
            if (h.is_dir) {
                for (const auto& [name, entry_is_dir] : dirs_[req.path])
                    h.dir_snapshot.push_back(DirEntry{name, entry_is_dir});
            }
            std::int32_t fd = next_fd_++;
            handles_[fd] = std::move(h);
            c.rc = fd;
            return c;
        }
        case SyscallType::close: {
            if (handles_.erase(req.fd) == 0) return fail(EBADF);
            c.rc = 0;
            return c;
        }
        case SyscallType::pread: {
            auto hit = handles_.find(req.fd);
            if (hit == handles_.end() || hit->second.is_dir) return fail(EBADF);
            auto fit = files_.find(hit->second.path);
            if (fit == files_.end()) return fail(ENOENT);
            const auto& data = fit->second.data;
            if (req.offset >= data.size()) {
                c.rc = 0;
                return c;
            }
            std::uint64_t n = std::min<std::uint64_t>(req.length, data.size() - req.offset);
            std::uint64_t copied = std::min<std::uint64_t>(n, req.dest.size());
            if (copied > 0)
                std::memcpy(req.dest.data(), data.data() + req.offset, copied);
            c.rc = static_cast<std::int64_t>(n);
            return c;
        }
        case SyscallType::pwrite: {
            auto hit = handles_.find(req.fd);
            if (hit == handles_.end() || hit->second.is_dir) return fail(EBADF);
            if ((hit->second.flags & kOpenWrite) == 0) return fail(EBADF);
            auto fit = files_.find(hit->second.path);
            if (fit == files_.end()) return fail(ENOENT);
            auto& data = fit->second.data;
            std::uint64_t end = req.offset + req.payload.size();
            if (end > data.size()) data.resize(end);
            if (!req.payload.empty())
                std::memcpy(data.data() + req.offset, req.payload.data(), req.payload.size());
            fit->second.mtime = mtime_clock_++;
            c.rc = static_cast<std::int64_t>(req.payload.size());
            return c;
        }
        case SyscallType::fstat_at: {
            StatRecord st;
            if (auto fit = files_.find(req.path); fit != files_.end()) {
                st.size = fit->second.data.size();
                st.mode = 0644;
                st.mtime = fit->second.mtime;
                st.is_dir = false;
            } else if (dirs_.count(req.path) > 0) {
                st.mode = 0755;
                st.is_dir = true;
            } else {
                return fail(ENOENT);
            }
            c.rc = 0;
            c.payload = st;
            return c;
        }
        case SyscallType::getdents: {
            auto hit = handles_.find(req.fd);
            if (hit == handles_.end() || !hit->second.is_dir) return fail(EBADF);
            const auto& snap = hit->second.dir_snapshot;
            std::vector<DirEntry> out;
            std::uint64_t pos = req.offset;
            for (std::uint64_t i = 0; i < req.length && pos + i < snap.size(); ++i)
                out.push_back(snap[pos + i]);
            c.rc = static_cast<std::int64_t>(out.size());
            c.payload = std::move(out);
            return c;
        }
        case SyscallType::tell: {
            auto hit = handles_.find(req.fd);
            if (hit == handles_.end()) return fail(EBADF);
            c.rc = static_cast<std::int64_t>(hit->second.cursor);
            return c;
        }
        case SyscallType::seek: {
            auto hit = handles_.find(req.fd);
            if (hit == handles_.end()) return fail(EBADF);
            hit->second.cursor = req.offset;
            c.rc = static_cast<std::int64_t>(req.offset);
            return c;
        }
    }
    return fail(EINVAL);
}

SyscallCompletion VirtualFileStore::read_with_cursor(std::int32_t fd, std::uint64_t length,
                                                     std::span<std::byte> dest) {
    std::lock_guard lk(mu_);
    auto hit = handles_.find(fd);
    if (hit == handles_.end() || hit->second.is_dir) return fail(EBADF);
    SyscallRequest r;
    r.type = SyscallType::pread;
    r.fd = fd;
    r.offset = hit->second.cursor;
    r.length = length;
    r.dest = dest;
    SyscallCompletion c = execute_locked(r);
    if (c.rc > 0) hit->second.cursor += static_cast<std::uint64_t>(c.rc);
    return c;
}

}  // namespace foreaction
