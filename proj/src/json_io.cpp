#include "agrimon/json_io.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "agrimon/ingest.hpp"

namespace agrimon {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError(std::string(what) + ": unknown field '" + key + "'");
        }
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(json& j, const CropGenome& g) {
    j = json::object();
    for (Gene gene : kAllGenes) {
        if (is_integer_gene(gene)) {
            j[std::string(gene_name(gene))] = static_cast<int>(g.get(gene));
        } else {
            j[std::string(gene_name(gene))] = g.get(gene);
        }
    }
}

void from_json(const json& j, CropGenome& g) {
    if (!j.is_object()) throw ValidationError("genome must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const auto gene = gene_from_name(key);
        if (!gene) throw ValidationError("genome: unknown gene '" + key + "'");
        if (!value.is_number()) throw ValidationError("genome: " + key + " must be a number");
        g.set(*gene, value.get<double>());
    }
}

void to_json(json& j, const Region& r) {
    j = json{{"row0", r.row0}, {"col0", r.col0}, {"row1", r.row1}, {"col1", r.col1}};
}

void from_json(const json& j, Region& r) {
    reject_unknown_keys(j, {"row0", "col0", "row1", "col1"}, "region");
    for (const char* key : {"row0", "col0", "row1", "col1"}) {
        if (!j.contains(key)) throw ValidationError(std::string("region: missing ") + key);
        if (!j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() < 0) {
            throw ValidationError(std::string("region: ") + key + " must be a non-negative integer");
        }
    }
    r = {j.at("row0").get<std::uint32_t>(), j.at("col0").get<std::uint32_t>(), j.at("row1").get<std::uint32_t>(),
         j.at("col1").get<std::uint32_t>()};
}

void to_json(json& j, const Strategy& s) {
    j = json{{"kind", strategy_name(s.kind)}, {"chunk", s.chunk}, {"groups", s.groups}};
}

void from_json(const json& j, Strategy& s) {
    if (j.is_string()) {
        const auto kind = strategy_from_name(j.get<std::string>());
        if (!kind) throw ValidationError("unknown strategy '" + j.get<std::string>() + "'");
        s = Strategy{*kind, 1, 0};
        return;
    }
    reject_unknown_keys(j, {"kind", "chunk", "groups"}, "strategy");
    if (!j.contains("kind")) throw ValidationError("strategy: missing kind");
    const auto kind = strategy_from_name(j.at("kind").get<std::string>());
    if (!kind) throw ValidationError("unknown strategy '" + j.at("kind").get<std::string>() + "'");
    s = Strategy{*kind, 1, 0};
    read_if(j, "chunk", s.chunk);
    read_if(j, "groups", s.groups);
}

void to_json(json& j, const GaConfig& c) {
    json genes = json::array();
    for (Gene g : c.free_genes) genes.push_back(gene_name(g));
    j = json{{"pop_size", c.pop_size},
             {"generations", c.generations},
             {"crossover_rate", c.crossover_rate},
             {"mutation_rate", c.mutation_rate},
             {"mutation_sd_frac", c.mutation_sd_frac},
             {"tournament_size", c.tournament_size},
             {"elitism", c.elitism},
             {"seed", c.seed},
             {"early_stop_rmse", c.early_stop_rmse},
             {"free_genes", genes}};
}

void from_json(const json& j, GaConfig& c) {
    reject_unknown_keys(j,
                        {"pop_size", "generations", "crossover_rate", "mutation_rate", "mutation_sd_frac",
                         "tournament_size", "elitism", "seed", "early_stop_rmse", "free_genes"},
                        "ga");
    try {
        read_if(j, "pop_size", c.pop_size);
        read_if(j, "generations", c.generations);
        read_if(j, "crossover_rate", c.crossover_rate);
        read_if(j, "mutation_rate", c.mutation_rate);
        read_if(j, "mutation_sd_frac", c.mutation_sd_frac);
        read_if(j, "tournament_size", c.tournament_size);
        read_if(j, "elitism", c.elitism);
        read_if(j, "seed", c.seed);
        read_if(j, "early_stop_rmse", c.early_stop_rmse);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ga: ") + e.what());
    }
    if (j.contains("free_genes")) {
        c.free_genes.clear();
        for (const auto& name : j.at("free_genes")) {
            const auto gene = name.is_string() ? gene_from_name(name.get<std::string>()) : std::nullopt;
            if (!gene) throw ValidationError("ga: unknown gene " + name.dump());
            c.free_genes.push_back(*gene);
        }
    }
}

void to_json(json& j, const GenomeBounds& b) {
    j = json::object();
    for (Gene gene : kAllGenes) j[std::string(gene_name(gene))] = json::array({b[gene].low, b[gene].high});
}

void to_json(json& j, const PixelEntry& e) {
    j = json{{"row", e.coord.row},
             {"col", e.coord.col},
             {"genome", e.result.genome},
             {"rmse", e.result.rmse},
             {"generations_run", e.result.generations_run},
             {"evaluations", e.result.evaluations}};
}

void from_json(const json& j, PixelEntry& e) {
    e.coord = {j.at("row").get<std::uint32_t>(), j.at("col").get<std::uint32_t>()};
    j.at("genome").get_to(e.result.genome);
    e.result.rmse = j.at("rmse").get<double>();
    e.result.generations_run = j.at("generations_run").get<int>();
    e.result.evaluations = j.at("evaluations").get<std::int64_t>();
}

void to_json(json& j, const ParamMap& m) {
    j = json{{"region", m.region}, {"seed", m.seed}, {"entries", m.entries}};
}

void from_json(const json& j, ParamMap& m) {
    j.at("region").get_to(m.region);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.entries = j.at("entries").get<std::vector<PixelEntry>>();
}

void to_json(json& j, const StrategyMetrics& m) {
    j = json{{"strategy", strategy_name(m.strategy)},
             {"workers", m.workers},
             {"pixels", m.pixels},
             {"generations", m.generations},
             {"messages", m.messages},
             {"bytes", m.bytes},
             {"tasks", m.tasks},
             {"retries", m.retries},
             {"predicted_messages", m.predicted_messages},
             {"setup_messages", m.setup_messages},
             {"setup_bytes", m.setup_bytes},
             {"wall_ms", m.wall_ms},
             {"busy_ms", m.busy_ms}};
    j["speedup"] = m.speedup ? json(*m.speedup) : json(nullptr);
}

void to_json(json& j, const ParamField& f) {
    j = json{{"rows", f.rows}, {"cols", f.cols}, {"genomes", f.genomes}};
}

void from_json(const json& j, ParamField& f) {
    f.rows = j.at("rows").get<std::uint32_t>();
    f.cols = j.at("cols").get<std::uint32_t>();
    f.genomes = j.at("genomes").get<std::vector<CropGenome>>();
    if (f.genomes.size() != std::size_t{f.rows} * f.cols) {
        throw ValidationError("param field: expected " + std::to_string(std::size_t{f.rows} * f.cols) + " genomes, found " +
                              std::to_string(f.genomes.size()));
    }
}

void to_json(json& j, const BenchScenario& s) {
    json strategies = json::array();
    for (auto k : s.strategies) strategies.push_back(strategy_name(k));
    j = json{{"rows", s.rows},           {"cols", s.cols},
             {"workers", s.workers},     {"strategies", strategies},
             {"pop_size", s.pop_size},   {"generations", s.generations},
             {"chunk", s.chunk},         {"groups", s.groups},
             {"days", s.days},           {"revisit_days", s.revisit_days},
             {"noise_sd", s.noise_sd},   {"seed", s.seed},
             {"transport", transport_name(s.transport)}};
}

void from_json(const json& j, BenchScenario& s) {
    reject_unknown_keys(j,
                        {"rows", "cols", "workers", "strategies", "pop_size", "generations", "chunk", "groups", "days",
                         "revisit_days", "noise_sd", "seed", "transport"},
                        "scenario");
    try {
        read_if(j, "rows", s.rows);
        read_if(j, "cols", s.cols);
        if (j.contains("workers")) {
            s.workers = j.at("workers").is_array() ? j.at("workers").get<std::vector<std::size_t>>()
                                                   : std::vector<std::size_t>{j.at("workers").get<std::size_t>()};
        }
        read_if(j, "pop_size", s.pop_size);
        read_if(j, "generations", s.generations);
        read_if(j, "chunk", s.chunk);
        read_if(j, "groups", s.groups);
        read_if(j, "days", s.days);
        read_if(j, "revisit_days", s.revisit_days);
        read_if(j, "noise_sd", s.noise_sd);
        read_if(j, "seed", s.seed);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    if (j.contains("strategies")) {
        s.strategies.clear();
        for (const auto& name : j.at("strategies")) {
            const auto kind = name.is_string() ? strategy_from_name(name.get<std::string>()) : std::nullopt;
            if (!kind) throw ValidationError("scenario: unknown strategy " + name.dump());
            s.strategies.push_back(*kind);
        }
    }
    if (j.contains("transport")) {
        const auto kind = transport_from_name(j.at("transport").get<std::string>());
        if (!kind) throw ValidationError("scenario: unknown transport " + j.at("transport").dump());
        s.transport = *kind;
    }
    if (s.rows == 0 || s.cols == 0 || s.days == 0) throw ValidationError("scenario: rows, cols and days must be positive");
    for (auto w : s.workers) {
        if (w == 0) throw ValidationError("scenario: worker counts must be >= 1");
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string weather_to_csv(const WeatherSeries& series, std::string_view station, std::chrono::sys_days season_start) {
    std::ostringstream out;
    out << kWeatherCsvHeader << '\n' << std::setprecision(17);
    for (const auto& r : series.records()) {
        out << format_date(season_start + std::chrono::days(r.day)) << ',' << station << ',' << r.rain_mm << ','
            << r.et0_mm << ',' << r.tmean_c << '\n';
    }
    return out.str();
}

WeatherFile weather_from_csv(std::string_view text) {
    const auto parsed = parse_weather_csv(text);
    if (parsed.report.failure) throw ValidationError("weather CSV: " + *parsed.report.failure);
    if (!parsed.report.rejections.empty()) {
        const auto& r = parsed.report.rejections.front();
        throw ValidationError("weather CSV " + r.locator + ": " + r.reason);
    }
    if (parsed.records.empty()) throw ValidationError("weather CSV has no rows");

    WeatherFile out;
    out.station = parsed.records.front().station_id;
    const auto first = parse_date(std::string_view(parsed.records.front().timestamp).substr(0, 10));
    out.season_start = *first;
    std::vector<WeatherRecord> records;
    for (std::size_t i = 0; i < parsed.records.size(); i += 3) {
        const auto& rain = parsed.records[i];
        if (rain.station_id != out.station) throw ValidationError("weather CSV mixes stations");
        const auto day = *parse_date(std::string_view(rain.timestamp).substr(0, 10));
        const int index = static_cast<int>((day - out.season_start).count());
        if (index != static_cast<int>(records.size())) {
            throw ValidationError("weather CSV is not one row per consecutive day at " + format_date(day));
        }
        records.push_back({index, rain.value, parsed.records[i + 1].value, parsed.records[i + 2].value});
    }
    out.series = WeatherSeries(std::move(records));
    return out;
}

std::string metrics_csv(const StrategyMetrics& m) {
    std::ostringstream out;
    out << "strategy,workers,pixels,generations,messages,predicted_messages,bytes,tasks,retries,setup_messages,"
           "setup_bytes,wall_ms\n";
    out << strategy_name(m.strategy) << ',' << m.workers << ',' << m.pixels << ',' << m.generations << ','
        << m.messages << ',' << m.predicted_messages << ',' << m.bytes << ',' << m.tasks << ',' << m.retries << ','
        << m.setup_messages << ',' << m.setup_bytes << ',' << std::fixed << std::setprecision(3) << m.wall_ms << '\n';
    return out.str();
}

}  // namespace agrimon
