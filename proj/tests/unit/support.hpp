#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "agrimon/crop_model.hpp"
#include "agrimon/distribution.hpp"
#include "agrimon/synthetic.hpp"

#include "../oracles/reference_model.hpp"

namespace testing_support {

using namespace agrimon;

inline CropGenome random_genome(std::mt19937_64& gen, std::size_t days) {
    const auto b = GenomeBounds::defaults(days);
    CropGenome g;
    for (Gene gene : kAllGenes) {
        std::uniform_real_distribution<double> d(b[gene].low, b[gene].high);
        g.set(gene, d(gen));
    }
    return g;
}

inline WeatherSeries random_weather(std::mt19937_64& gen, std::size_t days) {
    std::bernoulli_distribution wet(0.3);
    std::exponential_distribution<double> amount(1.0 / 8.0);
    std::uniform_real_distribution<double> et0(0.0, 9.0);
    std::vector<double> rain(days), evap(days);
    for (std::size_t t = 0; t < days; ++t) {
        rain[t] = wet(gen) ? amount(gen) : 0.0;
        evap[t] = et0(gen);
    }
    return WeatherSeries::from_columns(rain, evap);
}

inline oracle::Params to_oracle(const CropGenome& g) {
    return {g.sow_day, g.wmax_mm, g.s0_frac, g.irr_threshold, g.irr_depth_mm, g.growth_rate, g.lai_max};
}

inline std::vector<double> rain_of(const WeatherSeries& w) {
    std::vector<double> v;
    for (const auto& r : w.records()) v.push_back(r.rain_mm);
    return v;
}

inline std::vector<double> et0_of(const WeatherSeries& w) {
    std::vector<double> v;
    for (const auto& r : w.records()) v.push_back(r.et0_mm);
    return v;
}

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

inline bool same_bits(const ParamMap& a, const ParamMap& b) {
    if (a.region != b.region || a.seed != b.seed || a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto& x = a.entries[i];
        const auto& y = b.entries[i];
        if (x.coord != y.coord || x.result.generations_run != y.result.generations_run ||
            x.result.evaluations != y.result.evaluations || !same_bits(x.result.rmse, y.result.rmse)) {
            return false;
        }
        for (Gene g : kAllGenes) {
            if (!same_bits(x.result.genome.get(g), y.result.genome.get(g))) return false;
        }
    }
    return true;
}

/// Noiseless synthetic job over a rows x cols grid.
inline JobRequest synthetic_job(std::uint32_t rows, std::uint32_t cols, int pop, int gens, std::uint64_t seed = 3,
                                std::size_t days = 64, int revisit = 8) {
    JobRequest r;
    r.weather = synthetic::weather(days, seed);
    r.grid = synthesize_truth(synthetic::random_field(rows, cols, days, seed), r.weather, revisit, 0.0, seed);
    r.region = Region::full(rows, cols);
    r.config.pop_size = pop;
    r.config.generations = gens;
    r.config.early_stop_rmse = 0.0;
    r.config.seed = seed;
    r.bounds = GenomeBounds::defaults(days);
    r.template_genome = synthetic::template_genome();
    r.revisit_days = revisit;
    return r;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("agrimon-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing_support
