#include "foreaction/posix_store.hpp"

#include <algorithm>
#include <cerrno>
#include <filesystem>
#include <fstream>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace foreaction {

namespace {

SyscallCompletion fail(int err) {
    SyscallCompletion c;
    c.rc = -err;
    return c;
}

}  // namespace

PosixFileStore::PosixFileStore(std::string root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

std::string PosixFileStore::full(const std::string& path) const {
    return path.empty() ? root_ : root_ + "/" + path;
}

void PosixFileStore::put_file(const std::string& path, std::vector<std::byte> data,
                              std::uint64_t /*mtime*/) {
    fs::path p = full(path);
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
}

void PosixFileStore::make_dir(const std::string& path) {
    fs::create_directories(full(path));
}

std::vector<std::byte> PosixFileStore::read_file(const std::string& path) const {
    std::ifstream f(full(path), std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + full(path));
    std::vector<char> raw((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::transform(raw.begin(), raw.end(), out.begin(),
                   [](char c) { return static_cast<std::byte>(c); });
    return out;
}

std::vector<std::string> PosixFileStore::list_dir(const std::string& path) const {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(full(path)))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

Digest PosixFileStore::content_digest() const {
    std::vector<std::string> paths;
    for (const auto& e : fs::recursive_directory_iterator(root_))
        if (e.is_regular_file())
            paths.push_back(fs::relative(e.path(), root_).string());
    std::sort(paths.begin(), paths.end());
    Digest d;
    d.mix_u64(paths.size());
    for (const auto& p : paths) {
        d.mix_str(p);
        d.mix_bytes(read_file(p));
    }
    return d;
}

SyscallCompletion PosixFileStore::execute(const SyscallRequest& req) {
    SyscallCompletion c;
    switch (req.type) {
        case SyscallType::open_at: {
            std::string p = full(req.path);
            std::error_code ec;
            bool is_dir = fs::is_directory(p, ec);
            if (is_dir) {
                Handle h;
                h.is_dir = true;
                h.flags = req.flags;
                std::vector<std::string> names;
                for (const auto& e : fs::directory_iterator(p))
                    names.push_back(e.path().filename().string());
                std::sort(names.begin(), names.end());
                for (auto& n : names)
                    h.dir_snapshot.push_back(DirEntry{n, fs::is_directory(p + "/" + n)});
                std::lock_guard lk(mu_);
                std::int32_t vfd = next_fd_++;
                handles_[vfd] = std::move(h);
                c.rc = vfd;
                return c;
            }
            int oflags = (req.flags & kOpenWrite) ? O_RDWR : O_RDONLY;
            if (req.flags & kOpenCreate) oflags |= O_CREAT;
            if (req.flags & kOpenTrunc) oflags |= O_TRUNC;
            int fd = ::open(p.c_str(), oflags, 0644);
            if (fd < 0) return fail(errno);
            Handle h;
            h.fd = fd;
            h.flags = req.flags;
            std::lock_guard lk(mu_);
            std::int32_t vfd = next_fd_++;
            handles_[vfd] = std::move(h);
            c.rc = vfd;
            return c;
        }
        case SyscallType::close: {
            std::lock_guard lk(mu_);
            auto it = handles_.find(req.fd);
            if (it == handles_.end()) return fail(EBADF);
            if (it->second.fd >= 0) ::close(it->second.fd);
            handles_.erase(it);
            c.rc = 0;
            return c;
        }
        case SyscallType::pread: {
            int fd;
            {
                std::lock_guard lk(mu_);
                auto it = handles_.find(req.fd);
                if (it == handles_.end() || it->second.is_dir) return fail(EBADF);
                fd = it->second.fd;
            }
            std::vector<std::byte> tmp;
            std::byte* buf = req.dest.data();
            std::size_t cap = req.dest.size();
            if (cap < req.length) {
                tmp.resize(req.length);
                buf = tmp.data();
                cap = tmp.size();
            }
            ssize_t n = ::pread(fd, buf, req.length, static_cast<off_t>(req.offset));
            if (n < 0) return fail(errno);
            if (!tmp.empty() && !req.dest.empty())
                std::copy_n(tmp.begin(),
                            std::min<std::size_t>(req.dest.size(),
                                                  static_cast<std::size_t>(n)),
                            req.dest.begin());
            c.rc = n;
            return c;
        }
        case SyscallType::pwrite: {
            int fd;
            {
                std::lock_guard lk(mu_);
                auto it = handles_.find(req.fd);
                if (it == handles_.end() || it->second.is_dir) return fail(EBADF);
                if ((it->second.flags & kOpenWrite) == 0) return fail(EBADF);
                fd = it->second.fd;
            }
            ssize_t n = ::pwrite(fd, req.payload.data(), req.payload.size(),
                                 static_cast<off_t>(req.offset));
            if (n < 0) return fail(errno);
            c.rc = n;
            return c;
        }
        case SyscallType::fstat_at: {
            struct stat st{};
            if (::stat(full(req.path).c_str(), &st) != 0) return fail(errno);
            StatRecord r;
            r.size = static_cast<std::uint64_t>(st.st_size);
            r.mode = st.st_mode & 0777;
            r.mtime = static_cast<std::uint64_t>(st.st_mtime);
            r.is_dir = S_ISDIR(st.st_mode);
            c.rc = 0;
            c.payload = r;
            return c;
        }
        case SyscallType::getdents: {
            std::lock_guard lk(mu_);
            auto it = handles_.find(req.fd);
            if (it == handles_.end() || !it->second.is_dir) return fail(EBADF);
            const auto& snap = it->second.dir_snapshot;
            std::vector<DirEntry> out;
            for (std::uint64_t i = 0; i < req.length && req.offset + i < snap.size(); ++i)
                out.push_back(snap[req.offset + i]);
            c.rc = static_cast<std::int64_t>(out.size());
            c.payload = std::move(out);
            return c;
        }
        case SyscallType::tell: {
            std::lock_guard lk(mu_);
            auto it = handles_.find(req.fd);
            if (it == handles_.end()) return fail(EBADF);
            c.rc = static_cast<std::int64_t>(it->second.cursor);
            return c;
        }
        case SyscallType::seek: {
            std::lock_guard lk(mu_);
            auto it = handles_.find(req.fd);
            if (it == handles_.end()) return fail(EBADF);
            it->second.cursor = req.offset;
            c.rc = static_cast<std::int64_t>(req.offset);
            return c;
        }
    }
    return fail(EINVAL);
}

}  // namespace foreaction
