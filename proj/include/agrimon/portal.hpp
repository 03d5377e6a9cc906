#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "agrimon/distribution.hpp"
#include "agrimon/ingest.hpp"
#include "agrimon/record_log.hpp"

namespace agrimon {

/// Unknown job, raster or band.
class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Request is valid but the resource is not in a state that allows it.
class Conflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMinPriority = -10;
inline constexpr int kMaxPriority = 10;

struct JobSpec {
    std::string raster_id;
    Region region;
    Strategy strategy;
    GaConfig ga;
    /// Empty selects the station recorded with the raster.
    std::string weather_station;
    int priority = 0;
    std::string submitted_by;
    std::size_t workers = 2;

    bool operator==(const JobSpec&) const = default;
};

enum class JobState { Queued, Running, Done, Failed };

std::string_view job_state_name(JobState state) noexcept;
std::optional<JobState> job_state_from_name(std::string_view name) noexcept;

struct JobRecord {
    std::string id;
    /// Submission order, used for FIFO among equal priorities.
    std::uint64_t sequence = 0;
    JobSpec spec;
    JobState state = JobState::Queued;
    std::size_t done = 0;
    std::size_t total = 0;
    std::optional<StrategyMetrics> metrics;
    std::string result_ref;
    std::string error;
    /// Order in which jobs entered RUNNING, 0 while never started.
    std::uint64_t start_order = 0;
    std::string submitted_at;
    std::string started_at;
    std::string finished_at;

    double progress() const noexcept { return total == 0 ? 0.0 : static_cast<double>(done) / static_cast<double>(total); }
};

void to_json(nlohmann::json& j, const JobSpec& s);
void from_json(const nlohmann::json& j, JobSpec& s);
void to_json(nlohmann::json& j, const JobRecord& r);
void from_json(const nlohmann::json& j, JobRecord& r);

/// Sidecar describing how a raster was observed.
struct RasterMeta {
    std::size_t days = 0;
    int revisit_days = 0;
    std::string season_start = "2015-06-01";
    std::string station;
    std::string description;
};

struct RasterInfo {
    std::string id;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t bands = 0;
    double nodata = 0.0;
    RasterMeta meta;
};

void to_json(nlohmann::json& j, const RasterMeta& m);
void from_json(const nlohmann::json& j, RasterMeta& m);
void to_json(nlohmann::json& j, const RasterInfo& r);

struct PortalConfig {
    std::filesystem::path data_dir = "data";
    std::size_t max_concurrent_jobs = 1;
    TransportKind transport = TransportKind::InProcess;
};

/// Job table, priority scheduler and data catalogue behind the HTTP API.
/// Layout under data_dir: rasters/<id>.agr1 with <id>.meta.json, results/<job>.json,
/// jobs.log, observations.log, metadata.log.
class Portal {
public:
    explicit Portal(PortalConfig config);
    ~Portal();
    Portal(const Portal&) = delete;
    Portal& operator=(const Portal&) = delete;

    /// Starts the scheduler thread. Jobs only run after this.
    void start();
    /// Stops scheduling and waits for running jobs to finish.
    void stop();

    /// Throws NotFound (raster), ValidationError (region, config), CoverageGap (weather).
    std::string submit(const JobSpec& spec);
    JobRecord status(const std::string& id) const;
    std::vector<JobRecord> jobs() const;
    /// Throws NotFound, or Conflict unless the job is DONE.
    ParamMap result(const std::string& id) const;

    void register_raster(const std::string& id, const RasterGrid& grid, const RasterMeta& meta);
    std::vector<RasterInfo> rasters() const;
    RasterInfo raster(const std::string& id) const;
    RasterGrid raster_grid(const std::string& id) const;

    ObservationStore& store() noexcept { return store_; }
    MetadataIndex& metadata() noexcept { return metadata_; }

    std::size_t queue_depth() const;
    std::size_t running() const;
    /// Cumulative metrics per strategy over finished jobs.
    std::map<StrategyKind, StrategyMetrics> strategy_metrics() const;

    /// Blocks until the job is DONE or FAILED or the timeout passes; returns the last record.
    JobRecord wait(const std::string& id, std::chrono::milliseconds timeout) const;

private:
    void scheduler_loop(std::stop_token stop);
    void run(std::string id);
    void persist(const JobRecord& record);
    JobRequest prepare(const JobSpec& spec) const;
    std::filesystem::path raster_path(const std::string& id) const;

    PortalConfig config_;
    ObservationStore store_;
    MetadataIndex metadata_;
    RecordLog job_log_;

    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::map<std::string, JobRecord> jobs_;
    std::map<StrategyKind, StrategyMetrics> totals_;
    std::uint64_t next_sequence_ = 1;
    std::uint64_t next_start_ = 1;
    std::size_t running_ = 0;
    std::vector<std::jthread> runners_;
    std::jthread scheduler_;
};

}  // namespace agrimon
