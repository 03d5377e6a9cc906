#include "agrimon/portal.hpp"

#include <algorithm>
#include <cstdio>

#include "agrimon/json_io.hpp"
#include "agrimon/synthetic.hpp"

namespace agrimon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 4> kStateNames = {"QUEUED", "RUNNING", "DONE", "FAILED"};

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
}

void add_totals(std::map<StrategyKind, StrategyMetrics>& totals, const StrategyMetrics& m) {
    auto& t = totals[m.strategy];
    t.strategy = m.strategy;
    t.workers = std::max(t.workers, m.workers);
    t.generations = std::max(t.generations, m.generations);
    t.accumulate(m);
}

}  // namespace

std::string_view job_state_name(JobState state) noexcept { return kStateNames[static_cast<std::size_t>(state)]; }

std::optional<JobState> job_state_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kStateNames.size(); ++i) {
        if (kStateNames[i] == name) return static_cast<JobState>(i);
    }
    return std::nullopt;
}

void to_json(json& j, const JobSpec& s) {
    j = json{{"raster_id", s.raster_id},           {"region", s.region},       {"strategy", s.strategy},
             {"ga", s.ga},                         {"weather_station", s.weather_station},
             {"priority", s.priority},             {"submitted_by", s.submitted_by},
             {"workers", s.workers}};
}

void from_json(const json& j, JobSpec& s) {
    if (!j.is_object()) throw ValidationError("job spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        static constexpr std::array<std::string_view, 8> kKeys = {
            "raster_id", "region", "strategy", "ga", "weather_station", "priority", "submitted_by", "workers"};
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw ValidationError("job spec: unknown field '" + key + "'");
        }
    }
    if (!j.contains("raster_id") || !j.at("raster_id").is_string()) throw ValidationError("job spec: raster_id required");
    if (!j.contains("region")) throw ValidationError("job spec: region required");
    s = JobSpec{};
    s.raster_id = j.at("raster_id").get<std::string>();
    j.at("region").get_to(s.region);
    if (j.contains("strategy")) j.at("strategy").get_to(s.strategy);
    if (j.contains("ga")) j.at("ga").get_to(s.ga);
    try {
        if (j.contains("weather_station")) s.weather_station = j.at("weather_station").get<std::string>();
        if (j.contains("priority")) s.priority = j.at("priority").get<int>();
        if (j.contains("submitted_by")) s.submitted_by = j.at("submitted_by").get<std::string>();
        if (j.contains("workers")) s.workers = j.at("workers").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("job spec: ") + e.what());
    }
}

void to_json(json& j, const JobRecord& r) {
    j = json{{"id", r.id},
             {"sequence", r.sequence},
             {"spec", r.spec},
             {"state", job_state_name(r.state)},
             {"progress", {{"done", r.done}, {"total", r.total}, {"fraction", r.progress()}}},
             {"result_ref", r.result_ref},
             {"error", r.error},
             {"start_order", r.start_order},
             {"submitted_at", r.submitted_at},
             {"started_at", r.started_at},
             {"finished_at", r.finished_at}};
    j["metrics"] = r.metrics ? json(*r.metrics) : json(nullptr);
}

namespace {

StrategyMetrics metrics_from_json(const json& j) {
    StrategyMetrics m;
    m.strategy = strategy_from_name(j.at("strategy").get<std::string>()).value_or(StrategyKind::Pixel);
    m.workers = j.at("workers").get<std::size_t>();
    m.pixels = j.at("pixels").get<std::size_t>();
    m.generations = j.at("generations").get<int>();
    m.messages = j.at("messages").get<std::int64_t>();
    m.bytes = j.at("bytes").get<std::int64_t>();
    m.tasks = j.at("tasks").get<std::int64_t>();
    m.retries = j.at("retries").get<std::int64_t>();
    m.predicted_messages = j.at("predicted_messages").get<std::int64_t>();
    m.setup_messages = j.at("setup_messages").get<std::int64_t>();
    m.setup_bytes = j.at("setup_bytes").get<std::int64_t>();
    m.wall_ms = j.at("wall_ms").get<double>();
    m.busy_ms = j.at("busy_ms").get<std::vector<double>>();
    return m;
}

}  // namespace

void from_json(const json& j, JobRecord& r) {
    r.id = j.at("id").get<std::string>();
    r.sequence = j.at("sequence").get<std::uint64_t>();
    j.at("spec").get_to(r.spec);
    r.state = job_state_from_name(j.at("state").get<std::string>()).value_or(JobState::Failed);
    r.done = j.at("progress").at("done").get<std::size_t>();
    r.total = j.at("progress").at("total").get<std::size_t>();
    r.result_ref = j.at("result_ref").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.start_order = j.at("start_order").get<std::uint64_t>();
    r.submitted_at = j.at("submitted_at").get<std::string>();
    r.started_at = j.at("started_at").get<std::string>();
    r.finished_at = j.at("finished_at").get<std::string>();
    if (j.contains("metrics") && !j.at("metrics").is_null()) r.metrics = metrics_from_json(j.at("metrics"));
}

void to_json(json& j, const RasterMeta& m) {
    j = json{{"days", m.days},
             {"revisit_days", m.revisit_days},
             {"season_start", m.season_start},
             {"station", m.station},
             {"description", m.description}};
}

void from_json(const json& j, RasterMeta& m) {
    m.days = j.at("days").get<std::size_t>();
    m.revisit_days = j.value("revisit_days", 0);
    m.season_start = j.value("season_start", std::string("2015-06-01"));
    m.station = j.value("station", std::string());
    m.description = j.value("description", std::string());
}

void to_json(json& j, const RasterInfo& r) {
    j = json{{"id", r.id},     {"rows", r.rows},     {"cols", r.cols},
             {"bands", r.bands}, {"nodata", r.nodata}, {"meta", r.meta}};
}

// ---------------------------------------------------------------------------

Portal::Portal(PortalConfig config)
    : config_(std::move(config)),
      store_(config_.data_dir),
      metadata_(config_.data_dir),
      job_log_(config_.data_dir / "jobs.log") {
    if (config_.max_concurrent_jobs < 1) throw ValidationError("max_concurrent_jobs must be >= 1");
    fs::create_directories(config_.data_dir / "rasters");
    fs::create_directories(config_.data_dir / "results");

    // The log holds one snapshot per state change; the last one per id wins.
    for (const auto& line : job_log_.read_all()) {
        JobRecord record = json::parse(line).get<JobRecord>();
        next_sequence_ = std::max(next_sequence_, record.sequence + 1);
        next_start_ = std::max(next_start_, record.start_order + 1);
        jobs_[record.id] = std::move(record);
    }
    for (auto& [id, record] : jobs_) {
        if (record.state == JobState::Running) {
            record.state = JobState::Queued;
            record.done = 0;
            record.started_at.clear();
            record.start_order = 0;
            persist(record);
        }
        if (record.state == JobState::Done && record.metrics) add_totals(totals_, *record.metrics);
    }
}

Portal::~Portal() { stop(); }

void Portal::start() {
    std::lock_guard lock(mutex_);
    if (scheduler_.joinable()) return;
    scheduler_ = std::jthread([this](std::stop_token stop) { scheduler_loop(stop); });
}

void Portal::stop() {
    if (scheduler_.joinable()) {
        scheduler_.request_stop();
        changed_.notify_all();
        scheduler_.join();
    }
    std::vector<std::jthread> runners;
    {
        std::lock_guard lock(mutex_);
        runners.swap(runners_);
    }
    runners.clear();  // joins
}

void Portal::persist(const JobRecord& record) {
    const std::string line = json(record).dump();
    job_log_.append(std::span(&line, 1));
}

fs::path Portal::raster_path(const std::string& id) const { return config_.data_dir / "rasters" / (id + ".agr1"); }

void Portal::register_raster(const std::string& id, const RasterGrid& grid, const RasterMeta& meta) {
    if (!valid_id(id)) throw ValidationError("raster id must be 1-64 characters of [A-Za-z0-9_-]");
    if (meta.days == 0) throw ValidationError("raster meta: days must be positive");
    if (!parse_date(meta.season_start)) throw ValidationError("raster meta: bad season_start " + meta.season_start);
    save_raster(grid, raster_path(id));
    write_text_file(config_.data_dir / "rasters" / (id + ".meta.json"), json(meta).dump(2));
}

RasterInfo Portal::raster(const std::string& id) const {
    if (!valid_id(id) || !fs::exists(raster_path(id))) throw NotFound("unknown raster '" + id + "'");
    const auto grid = load_raster(raster_path(id));
    RasterInfo info{id, grid.rows(), grid.cols(), grid.bands(), grid.nodata(), {}};
    const auto meta_path = config_.data_dir / "rasters" / (id + ".meta.json");
    if (fs::exists(meta_path)) {
        json::parse(read_text_file(meta_path)).get_to(info.meta);
    }
    return info;
}

RasterGrid Portal::raster_grid(const std::string& id) const {
    if (!valid_id(id) || !fs::exists(raster_path(id))) throw NotFound("unknown raster '" + id + "'");
    return load_raster(raster_path(id));
}

std::vector<RasterInfo> Portal::rasters() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(config_.data_dir / "rasters")) {
        if (entry.path().extension() == ".agr1") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    std::vector<RasterInfo> out;
    for (const auto& id : ids) out.push_back(raster(id));
    return out;
}

JobRequest Portal::prepare(const JobSpec& spec) const {
    const auto info = raster(spec.raster_id);
    if (spec.priority < kMinPriority || spec.priority > kMaxPriority) {
        throw ValidationError("priority must lie in [" + std::to_string(kMinPriority) + ", " +
                              std::to_string(kMaxPriority) + "]");
    }
    if (spec.workers < 1 || spec.workers > 64) throw ValidationError("workers must lie in [1, 64]");
    spec.region.require_within(info.rows, info.cols);
    spec.ga.validate();
    spec.strategy.validate(spec.workers);

    JobRequest request;
    request.grid = raster_grid(spec.raster_id);
    request.region = spec.region;
    request.config = spec.ga;
    const std::size_t days = info.meta.days;
    if (days == 0) throw ValidationError("raster '" + spec.raster_id + "' has no season length recorded");
    const std::string station = spec.weather_station.empty() ? info.meta.station : spec.weather_station;
    if (station.empty()) throw ValidationError("no weather station given and none recorded with the raster");
    const auto start = parse_date(info.meta.season_start);
    if (!start) throw ValidationError("raster '" + spec.raster_id + "' has a bad season_start");
    request.weather = store_.query_weather(station, 0, static_cast<int>(days) - 1, *start).series;
    request.bounds = GenomeBounds::defaults(days);
    request.template_genome = synthetic::template_genome();
    request.revisit_days = info.meta.revisit_days > 0 ? info.meta.revisit_days
                                                      : infer_revisit_days(days, request.grid.bands());
    validate_search(request.config, request.bounds, request.template_genome, days);
    if (job_pixels(request.grid, request.region).empty()) throw ValidationError("region holds no valid pixels");
    return request;
}

std::string Portal::submit(const JobSpec& spec) {
    const auto request = prepare(spec);
    const auto total = job_pixels(request.grid, request.region).size();

    std::lock_guard lock(mutex_);
    JobRecord record;
    record.sequence = next_sequence_++;
    char id[32];
    std::snprintf(id, sizeof id, "job-%06llu", static_cast<unsigned long long>(record.sequence));
    record.id = id;
    record.spec = spec;
    record.total = total;
    record.submitted_at = now_utc_timestamp();
    persist(record);
    jobs_[record.id] = record;
    changed_.notify_all();
    return record.id;
}

JobRecord Portal::status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFound("unknown job '" + id + "'");
    return it->second;
}

std::vector<JobRecord> Portal::jobs() const {
    std::lock_guard lock(mutex_);
    std::vector<JobRecord> out;
    for (const auto& [id, r] : jobs_) out.push_back(r);
    return out;
}

ParamMap Portal::result(const std::string& id) const {
    const auto record = status(id);
    if (record.state != JobState::Done) {
        throw Conflict("job '" + id + "' is " + std::string(job_state_name(record.state)) + ", not DONE");
    }
    return json::parse(read_text_file(record.result_ref)).get<ParamMap>();
}

std::size_t Portal::queue_depth() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(jobs_.begin(), jobs_.end(), [](const auto& kv) { return kv.second.state == JobState::Queued; }));
}

std::size_t Portal::running() const {
    std::lock_guard lock(mutex_);
    return running_;
}

std::map<StrategyKind, StrategyMetrics> Portal::strategy_metrics() const {
    std::lock_guard lock(mutex_);
    return totals_;
}

JobRecord Portal::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw NotFound("unknown job '" + id + "'");
        if (it->second.state == JobState::Done || it->second.state == JobState::Failed) return it->second;
        if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) return jobs_.at(id);
    }
}

void Portal::scheduler_loop(std::stop_token stop) {
    std::unique_lock lock(mutex_);
    // Highest priority first, then earliest submission.
    auto pick = [&]() -> JobRecord* {
        if (running_ >= config_.max_concurrent_jobs) return nullptr;
        JobRecord* best = nullptr;
        for (auto& [id, r] : jobs_) {
            if (r.state != JobState::Queued) continue;
            if (!best || r.spec.priority > best->spec.priority ||
                (r.spec.priority == best->spec.priority && r.sequence < best->sequence)) {
                best = &r;
            }
        }
        return best;
    };
    while (!stop.stop_requested()) {
        JobRecord* next = pick();
        if (!next) {
            changed_.wait(lock, stop, [&] { return pick() != nullptr; });
            continue;
        }
        next->state = JobState::Running;
        next->start_order = next_start_++;
        next->started_at = now_utc_timestamp();
        try {
            persist(*next);
        } catch (const StorageError&) {
            // Still runs; a restart finds it QUEUED and runs it again.
        }
        ++running_;
        runners_.emplace_back([this, id = next->id] { run(id); });
        changed_.notify_all();
    }
}

void Portal::run(std::string id) {
    JobSpec spec;
    {
        std::lock_guard lock(mutex_);
        spec = jobs_.at(id).spec;
    }
    std::optional<JobOutput> output;
    std::string error;
    try {
        const auto request = prepare(spec);
        RunOptions options;
        options.transport = config_.transport;
        options.on_progress = [&](std::size_t done, std::size_t) {
            std::lock_guard lock(mutex_);
            auto& r = jobs_.at(id);
            r.done = std::max(r.done, done);
            changed_.notify_all();
        };
        output = run_job(request, spec.strategy, spec.workers, options);
    } catch (const std::exception& e) {
        error = e.what();
    }

    fs::path result_path;
    if (output) {
        result_path = config_.data_dir / "results" / (id + ".json");
        try {
            write_text_file(result_path, json(output->map).dump());
        } catch (const std::exception& e) {
            error = std::string("cannot store result: ") + e.what();
            output.reset();
        }
    }

    std::lock_guard lock(mutex_);
    auto& r = jobs_.at(id);
    if (output) {
        r.state = JobState::Done;
        r.done = r.total;
        r.metrics = output->metrics;
        r.result_ref = result_path.string();
        add_totals(totals_, output->metrics);
    } else {
        r.state = JobState::Failed;
        r.error = error;
    }
    r.finished_at = now_utc_timestamp();
    try {
        persist(r);
    } catch (const StorageError&) {
        // The in-memory record stays authoritative; a restart re-runs the job.
    }
    --running_;
    changed_.notify_all();
}

}  // namespace agrimon
