#include "agrimon/record_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

namespace agrimon {

namespace {

std::string errno_text(const std::string& what, const std::filesystem::path& path) {
    return what + " " + path.string() + ": " + std::strerror(errno);
}

}  // namespace

RecordLog::RecordLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StorageError(errno_text("cannot open", path_));

    struct stat st {};
    if (::fstat(fd_, &st) != 0) throw StorageError(errno_text("cannot stat", path_));
    size_ = static_cast<std::size_t>(st.st_size);

    // Drop a torn tail so later appends start on a line boundary.
    if (size_ > 0) {
        std::ifstream in(path_, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const auto last_newline = content.rfind('\n');
        const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
        if (keep != size_) {
            if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0) throw StorageError(errno_text("cannot repair", path_));
            size_ = keep;
        }
    }
}

RecordLog::~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
}

std::vector<std::string> RecordLog::read_all() const {
    std::ifstream in(path_, std::ios::binary);
    std::vector<std::string> lines;
    std::string line;
    std::size_t consumed = 0;
    while (consumed < size_ && std::getline(in, line)) {
        consumed += line.size() + 1;
        if (consumed > size_) break;
        lines.push_back(line);
    }
    return lines;
}

void RecordLog::append(std::span<const std::string> lines) {
    if (lines.empty()) return;
    std::string buffer;
    for (const auto& line : lines) {
        if (line.find('\n') != std::string::npos) throw StorageError("log record contains a newline");
        buffer += line;
        buffer += '\n';
    }

    const std::size_t before = size_;
    std::size_t limit = buffer.size();
    if (fault_after_) limit = std::min(limit, *fault_after_);
    std::size_t written = 0;
    bool ok = true;
    while (written < limit) {
        const auto n = ::write(fd_, buffer.data() + written, limit - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            ok = false;
            break;
        }
        written += static_cast<std::size_t>(n);
    }
    const int saved_errno = errno;
    if (fault_after_) {
        fault_after_.reset();
        ok = false;
    }
    if (ok && ::fsync(fd_) != 0) ok = false;
    if (!ok) {
        if (::ftruncate(fd_, static_cast<off_t>(before)) != 0) {
            throw StorageError(errno_text("rollback failed for", path_));
        }
        errno = saved_errno;
        throw StorageError("write to " + path_.string() + " failed; batch rolled back");
    }
    size_ = before + written;
}

}  // namespace agrimon
