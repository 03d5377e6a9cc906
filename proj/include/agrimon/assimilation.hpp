#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "agrimon/crop_model.hpp"
#include "agrimon/rng.hpp"

namespace agrimon {

/// Real-coded GA settings. Defaults are the values the recovery tests are tuned against.
struct GaConfig {
    int pop_size = 48;
    int generations = 120;
    double crossover_rate = 0.9;
    double mutation_rate = 0.4;
    double mutation_sd_frac = 0.1;
    int tournament_size = 3;
    int elitism = 1;
    std::uint64_t seed = 42;
    /// Stop once the best rmse reaches this value; 0 disables early stopping.
    double early_stop_rmse = 1e-6;
    std::vector<Gene> free_genes = {Gene::SowDay, Gene::WmaxMm, Gene::GrowthRate};

    /// Throws ValidationError on any broken invariant.
    void validate() const;

    bool operator==(const GaConfig&) const = default;
};

struct EvaluatedGenome {
    CropGenome genome;
    double rmse = 0.0;

    bool operator==(const EvaluatedGenome&) const = default;
};

struct PixelResult {
    CropGenome genome;
    double rmse = 0.0;
    int generations_run = 0;
    std::int64_t evaluations = 0;

    bool operator==(const PixelResult&) const = default;
};

/// Root-mean-square difference of two equally long series.
double rmse(std::span<const double> a, std::span<const double> b);

/// Misfit between the genome's noiseless samples and `observed`.
double fitness(const CropGenome& genome, const ObservableSeries& observed, const WeatherSeries& weather);

/// Checks that search bounds are usable for `config` and sit inside the model's
/// admissible ranges, and that `template_genome` is admissible.
void validate_search(const GaConfig& config, const GenomeBounds& bounds, const CropGenome& template_genome,
                     std::size_t season_len);

std::vector<CropGenome> init_population(const GaConfig& config, const GenomeBounds& bounds,
                                        const CropGenome& template_genome, Rng& rng);

std::vector<CropGenome> evolve_generation(std::span<const EvaluatedGenome> evaluated, const GaConfig& config,
                                          const GenomeBounds& bounds, Rng& rng);

/// Scores a whole population; result[i] belongs to population[i]. Implementations
/// may farm the work out, but must return values identical to fitness().
using BatchEvaluator = std::function<std::vector<double>(std::span<const CropGenome> population)>;

/// Evaluates every genome in the calling thread.
BatchEvaluator sequential_evaluator(const ObservableSeries& observed, const WeatherSeries& weather);

/// Observer hook for per-generation diagnostics: (generation, best-ever rmse).
using GenerationObserver = std::function<void(int generation, double best_rmse)>;

/// Full GA run for one pixel, seeded from config.seed.
PixelResult assimilate_pixel(const ObservableSeries& observed, const WeatherSeries& weather, const GaConfig& config,
                             const GenomeBounds& bounds, const CropGenome& template_genome);

/// Same run with a caller-supplied evaluator.
PixelResult assimilate_pixel(const ObservableSeries& observed, const WeatherSeries& weather, const GaConfig& config,
                             const GenomeBounds& bounds, const CropGenome& template_genome,
                             const BatchEvaluator& evaluate, const GenerationObserver& on_generation = {});

}  // namespace agrimon
