#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "agrimon/crop_model.hpp"
#include "agrimon/record_log.hpp"

namespace agrimon {

struct SensorObservation {
    std::string station_id;
    /// Canonical UTC form YYYY-MM-DDTHH:MM:SSZ.
    std::string timestamp;
    std::string variable;
    double value = 0.0;
    std::string source_file;

    bool operator==(const SensorObservation&) const = default;
};

struct Rejection {
    std::string locator;
    std::string reason;

    bool operator==(const Rejection&) const = default;
};

/// Counts are in observation records. A rejected CSV row counts as the three
/// records it would have produced.
struct IngestReport {
    std::size_t inserted = 0;
    std::size_t duplicates = 0;
    std::size_t rejected = 0;
    std::vector<Rejection> rejections;
    /// Set when a whole document or batch could not be processed.
    std::optional<std::string> failure;

    std::size_t encountered() const noexcept { return inserted + duplicates + rejected; }
    void merge(const IngestReport& other);
};

/// Parser output. `report.inserted` counts accepted candidates.
struct ParseResult {
    std::vector<SensorObservation> records;
    IngestReport report;
};

/// Canonicalises an ISO-8601 date or date-time (optional Z or +HH:MM offset) to
/// YYYY-MM-DDTHH:MM:SSZ. Returns nothing when the text is not a valid instant.
std::optional<std::string> normalize_timestamp(std::string_view text);
std::optional<std::chrono::sys_days> parse_date(std::string_view text);
std::string format_date(std::chrono::sys_days day);

inline constexpr std::string_view kWeatherCsvHeader = "date,station,rain_mm,et0_mm,tmean_c";

/// `date,station,rain_mm,et0_mm,tmean_c`; each row yields rain, et0 and tmean observations.
ParseResult parse_weather_csv(std::string_view text, std::string_view source = "");
/// `<observations><obs station=".." time=".."><var name="..">value</var>...</obs>...</observations>`
ParseResult parse_sensor_xml(std::string_view text, std::string_view source = "");
/// Reads and parses by extension (.csv or .xml). Throws if the file cannot be read.
ParseResult parse_file(const std::filesystem::path& path);

class CoverageGap : public std::runtime_error {
public:
    CoverageGap(const std::string& what, std::vector<std::pair<std::string, std::string>> missing)
        : std::runtime_error(what), missing_(std::move(missing)) {}
    /// (date, variable) pairs with no stored observation.
    const std::vector<std::pair<std::string, std::string>>& missing() const noexcept { return missing_; }

private:
    std::vector<std::pair<std::string, std::string>> missing_;
};

struct WeatherQuery {
    WeatherSeries series;
    /// Days whose tmean fell back to kDefaultTmeanC.
    std::vector<int> tmean_defaulted_days;
    bool warning() const noexcept { return !tmean_defaulted_days.empty(); }
};

inline constexpr double kDefaultTmeanC = 20.0;

/// Durable keyed store of sensor observations backed by an append-only log.
/// Keys are (station_id, timestamp, variable); the first write wins.
class ObservationStore {
public:
    explicit ObservationStore(const std::filesystem::path& data_dir);

    IngestReport ingest_batch(std::span<const SensorObservation> records);

    std::optional<SensorObservation> find(const std::string& station, const std::string& timestamp,
                                          const std::string& variable) const;
    /// All observations of a station with from <= timestamp < to (canonical strings).
    std::vector<SensorObservation> range(const std::string& station, const std::string& from,
                                         const std::string& to) const;
    std::vector<std::string> stations() const;
    std::size_t size() const;

    /// Daily series for season days [first_day, last_day], day 0 being `season_start`.
    /// Rain and ET0 are summed over each UTC day, tmean averaged.
    WeatherQuery query_weather(const std::string& station, int first_day, int last_day,
                               std::chrono::sys_days season_start) const;

    /// Test hook forwarded to the underlying log.
    void inject_write_failure(std::size_t bytes);

private:
    using Key = std::tuple<std::string, std::string, std::string>;

    mutable std::shared_mutex mutex_;
    RecordLog log_;
    std::map<Key, SensorObservation> index_;
};

struct MetadataEntry {
    std::string title;
    std::string description;
    std::vector<std::string> keywords;
    std::string source_uri;
    std::string ingested_at;

    bool operator==(const MetadataEntry&) const = default;
};

/// Keyword index over dataset descriptions, persisted like the observation store.
class MetadataIndex {
public:
    explicit MetadataIndex(const std::filesystem::path& data_dir);

    /// Lower-cases and de-duplicates keywords; stamps ingested_at if empty.
    MetadataEntry index_metadata(MetadataEntry entry);
    /// Case-insensitive exact keyword match, newest first.
    std::vector<MetadataEntry> search_metadata(std::string_view keyword) const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    RecordLog log_;
    std::vector<MetadataEntry> entries_;
};

/// Parses and ingests every .csv/.xml file in `inbox` (name order), moving each
/// processed file into `archive`. Files whose batch failed to store stay put.
IngestReport process_inbox(ObservationStore& store, const std::filesystem::path& inbox,
                           const std::filesystem::path& archive);

/// Polls `inbox` until `stop` is requested.
void watch_inbox(ObservationStore& store, const std::filesystem::path& inbox, const std::filesystem::path& archive,
                 std::chrono::milliseconds interval, std::stop_token stop,
                 const std::function<void(const IngestReport&)>& on_batch = {});

std::string now_utc_timestamp();

}  // namespace agrimon
