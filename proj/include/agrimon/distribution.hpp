#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agrimon/assimilation.hpp"
#include "agrimon/raster.hpp"
#include "agrimon/transport.hpp"

namespace agrimon {

enum class StrategyKind { Pixel, Population, Hierarchical };

std::string_view strategy_name(StrategyKind kind) noexcept;
std::optional<StrategyKind> strategy_from_name(std::string_view name) noexcept;

struct Strategy {
    StrategyKind kind = StrategyKind::Pixel;
    /// PIXEL: pixels per task.
    int chunk = 1;
    /// HIERARCHICAL: worker groups; 0 picks floor(sqrt(n_workers)).
    int groups = 0;

    static Strategy pixel(int chunk = 1) { return {StrategyKind::Pixel, chunk, 0}; }
    static Strategy population() { return {StrategyKind::Population, 1, 0}; }
    static Strategy hierarchical(int groups = 0) { return {StrategyKind::Hierarchical, 1, groups}; }

    /// Group count actually used for `n_workers`.
    int effective_groups(std::size_t n_workers) const;
    void validate(std::size_t n_workers) const;

    bool operator==(const Strategy&) const = default;
};

/// Raised when a job cannot complete; names the pixel whose task failed twice.
class JobFailure : public std::runtime_error {
public:
    JobFailure(const std::string& what, std::optional<PixelCoord> pixel)
        : std::runtime_error(what), pixel_(pixel) {}
    const std::optional<PixelCoord>& pixel() const noexcept { return pixel_; }

private:
    std::optional<PixelCoord> pixel_;
};

enum class TaskKind { PixelBatch, PixelHandoff };

/// Top-level unit of work sent by the master.
struct PlannedTask {
    TaskKind kind = TaskKind::PixelBatch;
    std::vector<PixelCoord> pixels;
    /// HIERARCHICAL: receiving group.
    int group = -1;
};

struct TaskPlan {
    Strategy strategy;
    std::size_t n_workers = 0;
    std::size_t pixel_count = 0;
    int generations = 0;
    /// PIXEL: pixel batches. HIERARCHICAL: one hand-off per pixel, dealt round-robin.
    /// POPULATION: empty, the master iterates pixels itself.
    std::vector<PlannedTask> top_level;
    /// Worker indices per evaluation group (POPULATION: one group; PIXEL: none).
    std::vector<std::vector<std::size_t>> groups;
    /// Fitness batches issued per generation by each group.
    std::vector<std::size_t> batches_per_generation;
    std::int64_t predicted_tasks = 0;
    /// Exact when the GA runs every generation (early stopping disabled or never triggered).
    std::int64_t predicted_messages = 0;
};

/// Splits a population of `pop_size` into `batches` contiguous slices; the first
/// pop_size % batches slices get one extra member. Returns slice sizes.
std::vector<std::size_t> split_population(std::size_t pop_size, std::size_t batches);

TaskPlan plan_tasks(const std::vector<PixelCoord>& pixels, const Strategy& strategy, std::size_t n_workers,
                    const GaConfig& config);
/// Plans over every pixel of `region`.
TaskPlan plan_tasks(const Region& region, const Strategy& strategy, std::size_t n_workers, const GaConfig& config);

struct StrategyMetrics {
    StrategyKind strategy = StrategyKind::Pixel;
    std::size_t workers = 0;
    std::size_t pixels = 0;
    int generations = 0;
    /// Task sends plus replies, over both levels of the hierarchy.
    std::int64_t messages = 0;
    /// Serialized task and reply payload bytes.
    std::int64_t bytes = 0;
    std::int64_t tasks = 0;
    /// Re-dispatches after a worker failure; not included in messages.
    std::int64_t retries = 0;
    std::int64_t predicted_messages = 0;
    /// One job-context frame per worker at start-up; not task traffic.
    std::int64_t setup_messages = 0;
    std::int64_t setup_bytes = 0;
    double wall_ms = 0.0;
    std::vector<double> busy_ms;
    std::optional<double> speedup;

    /// Adds counters of `other` (same strategy) into this.
    void accumulate(const StrategyMetrics& other);
};

struct PixelEntry {
    PixelCoord coord;
    PixelResult result;

    bool operator==(const PixelEntry&) const = default;
};

struct ParamMap {
    Region region;
    std::uint64_t seed = 0;
    /// Row-major over non-nodata pixels of the region.
    std::vector<PixelEntry> entries;

    const PixelEntry* find(PixelCoord coord) const noexcept;
    bool operator==(const ParamMap&) const = default;
};

struct JobRequest {
    RasterGrid grid;
    Region region;
    WeatherSeries weather;
    GaConfig config;
    GenomeBounds bounds;
    CropGenome template_genome;
    int revisit_days = 1;
};

/// Called from the master thread as each pixel completes: (done, total).
using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

struct RunOptions {
    TransportKind transport = TransportKind::InProcess;
    /// Fault injection: worker index -> tasks it completes before dying.
    std::map<std::size_t, int> crash_after;
    ProgressCallback on_progress;
};

struct JobOutput {
    ParamMap map;
    StrategyMetrics metrics;
};

/// Non-nodata pixels of the region in row-major order.
std::vector<PixelCoord> job_pixels(const RasterGrid& grid, const Region& region);

/// The smallest revisit interval consistent with `bands` samples over a `season_len`-day season.
int infer_revisit_days(std::size_t season_len, std::size_t bands);

JobOutput run_job(const JobRequest& request, const Strategy& strategy, std::size_t n_workers,
                  const RunOptions& options = {});

/// Plain loop over assimilate_pixel with per-pixel seeds; the reference every strategy must match.
ParamMap run_sequential(const JobRequest& request);

}  // namespace agrimon
