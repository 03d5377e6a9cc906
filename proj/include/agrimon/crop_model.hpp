#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agrimon {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct WeatherRecord {
    int day = 0;
    double rain_mm = 0.0;
    double et0_mm = 0.0;
    double tmean_c = 20.0;

    bool operator==(const WeatherRecord&) const = default;
};

/// Contiguous daily forcing for one season, day = 0..T-1.
class WeatherSeries {
public:
    WeatherSeries() = default;
    /// Validates contiguity and non-negativity.
    explicit WeatherSeries(std::vector<WeatherRecord> records);

    /// Builds a series from parallel arrays; day indices are assigned 0..T-1.
    static WeatherSeries from_columns(std::span<const double> rain_mm, std::span<const double> et0_mm,
                                      std::span<const double> tmean_c = {});

    std::size_t season_len() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<WeatherRecord>& records() const noexcept { return records_; }
    const WeatherRecord& operator[](std::size_t day) const { return records_[day]; }

    bool operator==(const WeatherSeries&) const = default;

private:
    std::vector<WeatherRecord> records_;
};

/// Genome fields in their canonical order.
enum class Gene : std::size_t {
    SowDay = 0,
    WmaxMm,
    S0Frac,
    IrrThreshold,
    IrrDepthMm,
    GrowthRate,
    LaiMax,
};

inline constexpr std::size_t kGeneCount = 7;
inline constexpr std::array<Gene, kGeneCount> kAllGenes = {
    Gene::SowDay,    Gene::WmaxMm,     Gene::S0Frac, Gene::IrrThreshold,
    Gene::IrrDepthMm, Gene::GrowthRate, Gene::LaiMax,
};

std::string_view gene_name(Gene gene) noexcept;
std::optional<Gene> gene_from_name(std::string_view name) noexcept;
constexpr bool is_integer_gene(Gene gene) noexcept { return gene == Gene::SowDay; }

/// The non-visible crop and soil parameters estimated per pixel.
struct CropGenome {
    int sow_day = 0;
    double wmax_mm = 150.0;
    double s0_frac = 0.5;
    double irr_threshold = 0.0;
    double irr_depth_mm = 0.0;
    double growth_rate = 0.1;
    double lai_max = 5.0;

    double get(Gene gene) const noexcept;
    /// Integer genes are rounded half away from zero.
    void set(Gene gene, double value) noexcept;

    std::array<double, kGeneCount> to_array() const noexcept;
    static CropGenome from_array(const std::array<double, kGeneCount>& values) noexcept;

    bool operator==(const CropGenome&) const = default;
};

struct Interval {
    double low = 0.0;
    double high = 0.0;

    bool contains(double x) const noexcept { return x >= low && x <= high; }
    double width() const noexcept { return high - low; }
    bool operator==(const Interval&) const = default;
};

/// Per-gene admissible intervals.
struct GenomeBounds {
    std::array<Interval, kGeneCount> intervals{};

    /// The documented defaults for a season of `season_len` days; sow_day in [0, floor(T/2)].
    static GenomeBounds defaults(std::size_t season_len);

    const Interval& operator[](Gene gene) const noexcept { return intervals[static_cast<std::size_t>(gene)]; }
    Interval& operator[](Gene gene) noexcept { return intervals[static_cast<std::size_t>(gene)]; }

    /// First gene outside its interval, if any.
    std::optional<Gene> first_violation(const CropGenome& genome) const noexcept;
    bool contains(const CropGenome& genome) const noexcept { return !first_violation(genome).has_value(); }
    /// Throws ValidationError naming the first offending gene.
    void require(const CropGenome& genome) const;
    /// True when every interval of this lies inside the matching interval of `outer`.
    bool within(const GenomeBounds& outer) const noexcept;

    bool operator==(const GenomeBounds&) const = default;
};

struct SimState {
    int day = 0;
    double soil_mm = 0.0;
    double lai = 0.0;
    double et_actual_mm = 0.0;
    double irrigation_mm = 0.0;
    double drainage_mm = 0.0;
    /// Stress and cover factors applied on this day.
    double water_factor = 0.0;
    double cover_factor = 0.0;

    bool operator==(const SimState&) const = default;
};

struct ObservableSeries {
    int revisit_days = 1;
    std::vector<double> values;
    double noise_sd = 0.0;

    bool operator==(const ObservableSeries&) const = default;
};

namespace model_constants {
/// LAI at the sowing day.
inline constexpr double kInitialLai = 0.1;
/// LAI at which canopy cover saturates.
inline constexpr double kCoverSaturationLai = 3.0;
/// Fraction of capacity below which transpiration is water-limited.
inline constexpr double kStressKneeFrac = 0.5;
}  // namespace model_constants

/// Runs the daily surrogate for weather.season_len() days. states[t] holds the
/// store and LAI at the start of day t together with the fluxes applied during
/// day t, so soil[t+1] = soil[t] + rain[t] + irrigation[t] - et[t] - drainage[t].
///
/// Genes are validated against GenomeBounds::defaults(T).
std::vector<SimState> simulate(const CropGenome& genome, const WeatherSeries& weather);

/// LAI at days 0, k, 2k, ... < T, with optional clamped Gaussian noise.
ObservableSeries observe(std::span<const SimState> states, int revisit_days, double noise_sd = 0.0,
                         std::uint64_t seed = 0);

/// Number of samples observe() yields: ceil(T / k).
std::size_t sample_count(std::size_t season_len, int revisit_days);

/// Noiseless LAI samples without materialising the state vector; identical to
/// observe(simulate(genome, weather), k).values.
std::vector<double> simulate_samples(const CropGenome& genome, const WeatherSeries& weather, int revisit_days);

}  // namespace agrimon
