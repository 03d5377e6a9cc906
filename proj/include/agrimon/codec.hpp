#pragma once

// Task encoding shared by every transport. All integers and floats are
// little-endian; see docs/task-encoding.md for the frame table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrimon/assimilation.hpp"
#include "agrimon/crop_model.hpp"
#include "agrimon/raster.hpp"

namespace agrimon::wire {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<std::byte>(v)); }
    void u32(std::uint32_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v);
    void f64s(std::span<const double> v);
    void str(const std::string& s);
    void raw(std::span<const std::byte> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

    std::vector<std::byte> take() && { return std::move(bytes_); }
    std::size_t size() const noexcept { return bytes_.size(); }

private:
    std::vector<std::byte> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::vector<double> f64s();
    std::string str();
    std::span<const std::byte> raw(std::size_t n);

    bool done() const noexcept { return offset_ == bytes_.size(); }
    void expect_done() const;

private:
    void need(std::size_t n) const;

    std::span<const std::byte> bytes_;
    std::size_t offset_ = 0;
};

enum class FrameKind : std::uint8_t {
    Context = 1,
    PixelTask = 2,
    FitnessTask = 3,
    PixelReply = 4,
    FitnessReply = 5,
    Failure = 6,
    Shutdown = 7,
};

struct Frame {
    FrameKind kind = FrameKind::Shutdown;
    std::uint64_t task_id = 0;
    /// Worker-measured handling time; replies only.
    double busy_ms = 0.0;
    std::vector<std::byte> payload;
};

/// u8 kind | u64 task_id | f64 busy_ms | u32 payload_len
inline constexpr std::size_t kFrameHeaderBytes = 1 + 8 + 8 + 4;
/// Refuse frames beyond this size.
inline constexpr std::uint32_t kMaxPayloadBytes = 256u << 20;

std::vector<std::byte> encode_frame(const Frame& frame);
/// Parses the fixed header; returns the payload length still to be read.
std::uint32_t decode_frame_header(std::span<const std::byte, kFrameHeaderBytes> header, Frame& frame);

/// Everything a worker needs that does not change between tasks of one job.
struct JobContext {
    WeatherSeries weather;
    GaConfig config;
    GenomeBounds bounds;
    CropGenome template_genome;
    int revisit_days = 1;
};

struct PixelWork {
    PixelCoord coord;
    std::vector<double> observed;
};

struct PixelTask {
    std::vector<PixelWork> pixels;
};

struct PixelOutcome {
    PixelCoord coord;
    PixelResult result;
};

struct PixelReply {
    std::vector<PixelOutcome> outcomes;
};

struct FitnessTask {
    PixelCoord coord;
    std::uint32_t first_index = 0;
    std::vector<CropGenome> genomes;
    std::vector<double> observed;
};

struct FitnessReply {
    std::uint32_t first_index = 0;
    std::vector<double> rmse;
};

std::vector<std::byte> encode(const JobContext& v);
std::vector<std::byte> encode(const PixelTask& v);
std::vector<std::byte> encode(const PixelReply& v);
std::vector<std::byte> encode(const FitnessTask& v);
std::vector<std::byte> encode(const FitnessReply& v);
std::vector<std::byte> encode_failure(const std::string& message);

JobContext decode_context(std::span<const std::byte> bytes);
PixelTask decode_pixel_task(std::span<const std::byte> bytes);
PixelReply decode_pixel_reply(std::span<const std::byte> bytes);
FitnessTask decode_fitness_task(std::span<const std::byte> bytes);
FitnessReply decode_fitness_reply(std::span<const std::byte> bytes);
std::string decode_failure(std::span<const std::byte> bytes);

}  // namespace agrimon::wire
