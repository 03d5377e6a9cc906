#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "agrimon/bench.hpp"
#include "agrimon/distribution.hpp"

namespace agrimon {

// nlohmann adapters. Readers of partial documents (GaConfig, Strategy,
// BenchScenario) start from the defaults and reject unknown keys.
void to_json(nlohmann::json& j, const CropGenome& g);
void from_json(const nlohmann::json& j, CropGenome& g);
void to_json(nlohmann::json& j, const Region& r);
void from_json(const nlohmann::json& j, Region& r);
void to_json(nlohmann::json& j, const Strategy& s);
void from_json(const nlohmann::json& j, Strategy& s);
void to_json(nlohmann::json& j, const GaConfig& c);
void from_json(const nlohmann::json& j, GaConfig& c);
void to_json(nlohmann::json& j, const GenomeBounds& b);
void to_json(nlohmann::json& j, const PixelEntry& e);
void from_json(const nlohmann::json& j, PixelEntry& e);
void to_json(nlohmann::json& j, const ParamMap& m);
void from_json(const nlohmann::json& j, ParamMap& m);
void to_json(nlohmann::json& j, const StrategyMetrics& m);
void to_json(nlohmann::json& j, const ParamField& f);
void from_json(const nlohmann::json& j, ParamField& f);
void to_json(nlohmann::json& j, const BenchScenario& s);
void from_json(const nlohmann::json& j, BenchScenario& s);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and a rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Weather series as the ingest CSV format, one row per day from `season_start`.
std::string weather_to_csv(const WeatherSeries& series, std::string_view station,
                           std::chrono::sys_days season_start);

struct WeatherFile {
    WeatherSeries series;
    std::string station;
    std::chrono::sys_days season_start{};
};

/// Strict reader for a single-station, gap-free weather CSV. Throws ValidationError.
WeatherFile weather_from_csv(std::string_view text);

/// One line per metrics field, CSV with a header.
std::string metrics_csv(const StrategyMetrics& m);

}  // namespace agrimon
