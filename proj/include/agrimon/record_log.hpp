#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agrimon {

class StorageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newline-framed append-only file. A batch is written with one write, flushed
/// to disk, and rolled back by truncation if any part of it fails, so the file
/// only ever holds whole batches. A torn final line left by a crash is cut off
/// when the log is opened.
class RecordLog {
public:
    explicit RecordLog(std::filesystem::path path);
    ~RecordLog();
    RecordLog(const RecordLog&) = delete;
    RecordLog& operator=(const RecordLog&) = delete;

    /// Every complete line, in append order.
    std::vector<std::string> read_all() const;
    /// Appends all lines or none. Lines must not contain '\n'.
    void append(std::span<const std::string> lines);
    std::size_t size_bytes() const noexcept { return size_; }
    const std::filesystem::path& path() const noexcept { return path_; }

    /// Test hook: the next append writes at most `bytes` bytes and then fails.
    void inject_write_failure(std::size_t bytes) { fault_after_ = bytes; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    std::size_t size_ = 0;
    std::optional<std::size_t> fault_after_;
};

}  // namespace agrimon
