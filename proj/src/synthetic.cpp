#include "agrimon/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "agrimon/rng.hpp"

namespace agrimon::synthetic {

WeatherSeries weather(std::size_t days, std::uint64_t seed) {
    Rng rng(seed ^ 0x5745415448455231ULL);
    std::vector<WeatherRecord> records(days);
    for (std::size_t t = 0; t < days; ++t) {
        const double phase = std::sin(std::numbers::pi * static_cast<double>(t) / static_cast<double>(days));
        auto& r = records[t];
        r.day = static_cast<int>(t);
        r.rain_mm = rng.uniform() < 0.08 ? rng.exponential(6.0) : 0.0;
        r.et0_mm = 5.0 + 1.5 * phase;
        r.tmean_c = 22.0 + 5.0 * phase;
    }
    return WeatherSeries(std::move(records));
}

CropGenome template_genome() {
    CropGenome g;
    g.sow_day = 10;
    g.wmax_mm = 150.0;
    g.s0_frac = 1.0;
    g.irr_threshold = 0.0;
    g.irr_depth_mm = 0.0;
    g.growth_rate = 0.1;
    g.lai_max = 6.0;
    return g;
}

GenomeBounds truth_prior(std::size_t days) {
    auto b = GenomeBounds::defaults(days);
    const double last_sow = std::floor(static_cast<double>(days) / 3.0);
    b[Gene::SowDay] = {std::min(5.0, last_sow), last_sow};
    b[Gene::WmaxMm] = {80.0, 250.0};
    b[Gene::GrowthRate] = {0.05, 0.2};
    return b;
}

ParamField random_field(std::uint32_t rows, std::uint32_t cols, std::size_t days, std::uint64_t seed) {
    const auto prior = truth_prior(days);
    const auto base = template_genome();
    ParamField field{rows, cols, {}};
    field.genomes.reserve(std::size_t{rows} * cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
            Rng rng(mix_seed(seed ^ 0x4649454C44ULL, r, c));
            CropGenome g = base;
            for (Gene gene : {Gene::SowDay, Gene::WmaxMm, Gene::GrowthRate}) {
                g.set(gene, rng.uniform(prior[gene].low, prior[gene].high));
            }
            field.genomes.push_back(g);
        }
    }
    return field;
}

}  // namespace agrimon::synthetic
