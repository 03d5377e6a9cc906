#include "agrimon/crop_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agrimon/rng.hpp"

namespace agrimon {

WeatherSeries::WeatherSeries(std::vector<WeatherRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.day != static_cast<int>(i)) {
            std::ostringstream msg;
            msg << "weather record " << i << " has day " << r.day << "; days must be contiguous from 0";
            throw ValidationError(msg.str());
        }
        if (!(r.rain_mm >= 0.0) || !std::isfinite(r.rain_mm)) {
            throw ValidationError("weather day " + std::to_string(i) + ": rain_mm must be finite and >= 0");
        }
        if (!(r.et0_mm >= 0.0) || !std::isfinite(r.et0_mm)) {
            throw ValidationError("weather day " + std::to_string(i) + ": et0_mm must be finite and >= 0");
        }
    }
}

WeatherSeries WeatherSeries::from_columns(std::span<const double> rain_mm, std::span<const double> et0_mm,
                                          std::span<const double> tmean_c) {
    if (rain_mm.size() != et0_mm.size() || (!tmean_c.empty() && tmean_c.size() != rain_mm.size())) {
        throw ValidationError("weather columns differ in length");
    }
    std::vector<WeatherRecord> records(rain_mm.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i] = {static_cast<int>(i), rain_mm[i], et0_mm[i], tmean_c.empty() ? 20.0 : tmean_c[i]};
    }
    return WeatherSeries(std::move(records));
}

namespace {

constexpr std::array<std::string_view, kGeneCount> kGeneNames = {
    "sow_day", "wmax_mm", "s0_frac", "irr_threshold", "irr_depth_mm", "growth_rate", "lai_max",
};

// One day-stepping kernel shared by simulate() and simulate_samples(); the
// sink sees every day's state before the update is applied.
template <typename Sink>
void run_surrogate(const CropGenome& g, const WeatherSeries& weather, Sink&& sink) {
    using namespace model_constants;
    const double capacity = g.wmax_mm;
    const double knee = kStressKneeFrac * capacity;
    double soil = g.s0_frac * capacity;
    double lai = 0.0;
    const auto& records = weather.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int t = static_cast<int>(i);
        const bool sown = t >= g.sow_day;
        if (t == g.sow_day) lai = kInitialLai;

        const double irrigation = (sown && soil / capacity < g.irr_threshold) ? g.irr_depth_mm : 0.0;
        const double available = soil + records[i].rain_mm + irrigation;
        const double drainage = std::max(0.0, available - capacity);
        const double retained = std::min(available, capacity);
        const double water_factor = std::min(1.0, retained / knee);
        const double cover_factor = std::min(1.0, lai / kCoverSaturationLai);
        const double et = std::min(retained, records[i].et0_mm * cover_factor * water_factor);

        sink(SimState{t, soil, lai, et, irrigation, drainage, water_factor, cover_factor});

        soil = retained - et;
        if (sown) {
            lai = std::clamp(lai + g.growth_rate * lai * (1.0 - lai / g.lai_max) * water_factor, 0.0, g.lai_max);
        }
    }
}

void check_inputs(const CropGenome& genome, const WeatherSeries& weather) {
    if (weather.empty()) throw ValidationError("weather series is empty");
    GenomeBounds::defaults(weather.season_len()).require(genome);
}

}  // namespace

std::string_view gene_name(Gene gene) noexcept { return kGeneNames[static_cast<std::size_t>(gene)]; }

std::optional<Gene> gene_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (kGeneNames[i] == name) return static_cast<Gene>(i);
    }
    return std::nullopt;
}

double CropGenome::get(Gene gene) const noexcept {
    switch (gene) {
        case Gene::SowDay: return sow_day;
        case Gene::WmaxMm: return wmax_mm;
        case Gene::S0Frac: return s0_frac;
        case Gene::IrrThreshold: return irr_threshold;
        case Gene::IrrDepthMm: return irr_depth_mm;
        case Gene::GrowthRate: return growth_rate;
        case Gene::LaiMax: return lai_max;
    }
    return 0.0;
}

void CropGenome::set(Gene gene, double value) noexcept {
    switch (gene) {
        case Gene::SowDay: sow_day = static_cast<int>(std::round(value)); break;
        case Gene::WmaxMm: wmax_mm = value; break;
        case Gene::S0Frac: s0_frac = value; break;
        case Gene::IrrThreshold: irr_threshold = value; break;
        case Gene::IrrDepthMm: irr_depth_mm = value; break;
        case Gene::GrowthRate: growth_rate = value; break;
        case Gene::LaiMax: lai_max = value; break;
    }
}

std::array<double, kGeneCount> CropGenome::to_array() const noexcept {
    std::array<double, kGeneCount> out{};
    for (Gene g : kAllGenes) out[static_cast<std::size_t>(g)] = get(g);
    return out;
}

CropGenome CropGenome::from_array(const std::array<double, kGeneCount>& values) noexcept {
    CropGenome genome;
    for (Gene g : kAllGenes) genome.set(g, values[static_cast<std::size_t>(g)]);
    return genome;
}

GenomeBounds GenomeBounds::defaults(std::size_t season_len) {
    GenomeBounds b;
    b[Gene::SowDay] = {0.0, static_cast<double>(season_len / 2)};
    b[Gene::WmaxMm] = {50.0, 300.0};
    b[Gene::S0Frac] = {0.0, 1.0};
    b[Gene::IrrThreshold] = {0.0, 1.0};
    b[Gene::IrrDepthMm] = {0.0, 50.0};
    b[Gene::GrowthRate] = {0.01, 0.3};
    b[Gene::LaiMax] = {1.0, 8.0};
    return b;
}

std::optional<Gene> GenomeBounds::first_violation(const CropGenome& genome) const noexcept {
    for (Gene g : kAllGenes) {
        const double v = genome.get(g);
        if (!std::isfinite(v) || !(*this)[g].contains(v)) return g;
    }
    return std::nullopt;
}

void GenomeBounds::require(const CropGenome& genome) const {
    if (auto bad = first_violation(genome)) {
        const auto& iv = (*this)[*bad];
        std::ostringstream msg;
        msg << "gene " << gene_name(*bad) << " = " << genome.get(*bad) << " outside [" << iv.low << ", " << iv.high
            << "]";
        throw ValidationError(msg.str());
    }
}

bool GenomeBounds::within(const GenomeBounds& outer) const noexcept {
    for (Gene g : kAllGenes) {
        if ((*this)[g].low < outer[g].low || (*this)[g].high > outer[g].high) return false;
    }
    return true;
}

std::vector<SimState> simulate(const CropGenome& genome, const WeatherSeries& weather) {
    check_inputs(genome, weather);
    std::vector<SimState> states;
    states.reserve(weather.season_len());
    run_surrogate(genome, weather, [&](const SimState& s) { states.push_back(s); });
    return states;
}

std::size_t sample_count(std::size_t season_len, int revisit_days) {
    if (revisit_days < 1) throw ValidationError("revisit_days must be >= 1");
    const auto k = static_cast<std::size_t>(revisit_days);
    return (season_len + k - 1) / k;
}

ObservableSeries observe(std::span<const SimState> states, int revisit_days, double noise_sd, std::uint64_t seed) {
    if (revisit_days < 1) throw ValidationError("revisit_days must be >= 1");
    if (states.empty()) throw ValidationError("cannot observe an empty state trajectory");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be finite and >= 0");

    ObservableSeries out;
    out.revisit_days = revisit_days;
    out.noise_sd = noise_sd;
    out.values.reserve(sample_count(states.size(), revisit_days));
    Rng rng(seed);
    for (std::size_t t = 0; t < states.size(); t += static_cast<std::size_t>(revisit_days)) {
        double v = states[t].lai;
        if (noise_sd > 0.0) v = std::max(0.0, v + rng.normal(0.0, noise_sd));
        out.values.push_back(v);
    }
    return out;
}

std::vector<double> simulate_samples(const CropGenome& genome, const WeatherSeries& weather, int revisit_days) {
    check_inputs(genome, weather);
    std::vector<double> samples;
    samples.reserve(sample_count(weather.season_len(), revisit_days));
    const int k = revisit_days;
    run_surrogate(genome, weather, [&](const SimState& s) {
        if (s.day % k == 0) samples.push_back(s.lai);
    });
    return samples;
}

}  // namespace agrimon
