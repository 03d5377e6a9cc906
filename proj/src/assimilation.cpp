#include "agrimon/assimilation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace agrimon {

namespace {

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

// Integer genes take the innermost integers of their interval.
Interval effective_interval(Gene gene, const Interval& iv) {
    if (!is_integer_gene(gene)) return iv;
    return {std::ceil(iv.low), std::floor(iv.high)};
}

double fit_to_bounds(Gene gene, double value, const GenomeBounds& bounds) {
    const Interval iv = effective_interval(gene, bounds[gene]);
    double v = std::clamp(value, iv.low, iv.high);
    if (is_integer_gene(gene)) v = std::clamp(std::round(v), iv.low, iv.high);
    return v;
}

void require_searchable(const GaConfig& config, const GenomeBounds& bounds) {
    for (Gene g : config.free_genes) {
        const Interval iv = effective_interval(g, bounds[g]);
        if (!(bounds[g].low < bounds[g].high) || !(iv.low <= iv.high)) {
            std::ostringstream msg;
            msg << "degenerate search bounds for gene " << gene_name(g) << ": [" << bounds[g].low << ", "
                << bounds[g].high << "]";
            throw ValidationError(msg.str());
        }
    }
}

// Indices ordered by (rmse, index).
std::vector<std::size_t> ranking(std::span<const EvaluatedGenome> evaluated) {
    std::vector<std::size_t> order(evaluated.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return evaluated[a].rmse < evaluated[b].rmse; });
    return order;
}

}  // namespace

void GaConfig::validate() const {
    if (pop_size < 2) throw ValidationError("pop_size must be >= 2");
    if (generations < 0) throw ValidationError("generations must be >= 0");
    if (tournament_size < 1 || tournament_size > pop_size) {
        throw ValidationError("tournament_size must lie in [1, pop_size]");
    }
    if (elitism < 0 || elitism >= pop_size) throw ValidationError("elitism must lie in [0, pop_size)");
    if (!probability(crossover_rate)) throw ValidationError("crossover_rate must lie in [0, 1]");
    if (!probability(mutation_rate)) throw ValidationError("mutation_rate must lie in [0, 1]");
    if (!(mutation_sd_frac >= 0.0) || !std::isfinite(mutation_sd_frac)) {
        throw ValidationError("mutation_sd_frac must be finite and >= 0");
    }
    if (!(early_stop_rmse >= 0.0)) throw ValidationError("early_stop_rmse must be >= 0");
    if (free_genes.empty()) throw ValidationError("free_genes must not be empty");
    for (std::size_t i = 0; i < free_genes.size(); ++i) {
        for (std::size_t j = i + 1; j < free_genes.size(); ++j) {
            if (free_genes[i] == free_genes[j]) {
                throw ValidationError("free gene listed twice: " + std::string(gene_name(free_genes[i])));
            }
        }
    }
}

double rmse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("rmse: series lengths differ (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw ValidationError("rmse: empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double fitness(const CropGenome& genome, const ObservableSeries& observed, const WeatherSeries& weather) {
    const std::size_t expected = sample_count(weather.season_len(), observed.revisit_days);
    if (observed.values.size() != expected) {
        std::ostringstream msg;
        msg << "observed series has " << observed.values.size() << " samples but a " << weather.season_len()
            << "-day season at revisit " << observed.revisit_days << " yields " << expected;
        throw ValidationError(msg.str());
    }
    const auto simulated = simulate_samples(genome, weather, observed.revisit_days);
    return rmse(simulated, observed.values);
}

void validate_search(const GaConfig& config, const GenomeBounds& bounds, const CropGenome& template_genome,
                     std::size_t season_len) {
    config.validate();
    require_searchable(config, bounds);
    const auto admissible = GenomeBounds::defaults(season_len);
    for (Gene g : config.free_genes) {
        if (bounds[g].low < admissible[g].low || bounds[g].high > admissible[g].high) {
            throw ValidationError("search bounds for gene " + std::string(gene_name(g)) +
                                  " exceed the model's admissible range");
        }
    }
    // Free genes of the template are overwritten, so only the fixed ones must be admissible.
    CropGenome probe = template_genome;
    for (Gene g : config.free_genes) probe.set(g, bounds[g].low);
    admissible.require(probe);
}

std::vector<CropGenome> init_population(const GaConfig& config, const GenomeBounds& bounds,
                                        const CropGenome& template_genome, Rng& rng) {
    config.validate();
    require_searchable(config, bounds);
    std::vector<CropGenome> population(static_cast<std::size_t>(config.pop_size), template_genome);
    for (auto& genome : population) {
        for (Gene g : config.free_genes) {
            const Interval iv = bounds[g];
            genome.set(g, fit_to_bounds(g, rng.uniform(iv.low, iv.high), bounds));
        }
    }
    return population;
}

std::vector<CropGenome> evolve_generation(std::span<const EvaluatedGenome> evaluated, const GaConfig& config,
                                          const GenomeBounds& bounds, Rng& rng) {
    config.validate();
    if (evaluated.size() != static_cast<std::size_t>(config.pop_size)) {
        throw ValidationError("evolve_generation: population has " + std::to_string(evaluated.size()) +
                              " members, expected " + std::to_string(config.pop_size));
    }
    for (const auto& e : evaluated) {
        if (!std::isfinite(e.rmse)) throw ValidationError("evolve_generation: non-finite rmse in population");
    }
    require_searchable(config, bounds);

    const auto order = ranking(evaluated);
    const auto n = evaluated.size();
    std::vector<CropGenome> next;
    next.reserve(n);
    for (int i = 0; i < config.elitism; ++i) next.push_back(evaluated[order[static_cast<std::size_t>(i)]].genome);

    // Drawing ranks and keeping the smallest is tournament selection on the sorted population.
    auto tournament = [&]() -> const CropGenome& {
        std::uint64_t best = rng.below(n);
        for (int i = 1; i < config.tournament_size; ++i) best = std::min(best, rng.below(n));
        return evaluated[order[best]].genome;
    };
    auto mutate = [&](CropGenome& child) {
        for (Gene g : config.free_genes) {
            if (rng.uniform() >= config.mutation_rate) continue;
            const double sd = config.mutation_sd_frac * bounds[g].width();
            child.set(g, fit_to_bounds(g, child.get(g) + rng.normal(0.0, sd), bounds));
        }
    };

    while (next.size() < n) {
        CropGenome a = tournament();
        CropGenome b = tournament();
        if (rng.uniform() < config.crossover_rate) {
            for (Gene g : config.free_genes) {
                if (rng.uniform() < 0.5) {
                    const double va = a.get(g);
                    a.set(g, b.get(g));
                    b.set(g, va);
                }
            }
        }
        mutate(a);
        mutate(b);
        next.push_back(a);
        if (next.size() < n) next.push_back(b);
    }
    return next;
}

BatchEvaluator sequential_evaluator(const ObservableSeries& observed, const WeatherSeries& weather) {
    return [&observed, &weather](std::span<const CropGenome> population) {
        std::vector<double> scores;
        scores.reserve(population.size());
        for (const auto& genome : population) scores.push_back(fitness(genome, observed, weather));
        return scores;
    };
}

PixelResult assimilate_pixel(const ObservableSeries& observed, const WeatherSeries& weather, const GaConfig& config,
                             const GenomeBounds& bounds, const CropGenome& template_genome) {
    return assimilate_pixel(observed, weather, config, bounds, template_genome,
                            sequential_evaluator(observed, weather));
}

PixelResult assimilate_pixel(const ObservableSeries& observed, const WeatherSeries& weather, const GaConfig& config,
                             const GenomeBounds& bounds, const CropGenome& template_genome,
                             const BatchEvaluator& evaluate, const GenerationObserver& on_generation) {
    validate_search(config, bounds, template_genome, weather.season_len());
    if (observed.values.size() != sample_count(weather.season_len(), observed.revisit_days)) {
        // Surface the mismatch before any work is farmed out.
        (void)fitness(template_genome, observed, weather);
    }

    Rng rng(config.seed);
    std::vector<EvaluatedGenome> evaluated;
    PixelResult result;
    bool have_best = false;

    auto score = [&](std::vector<CropGenome> population) {
        const auto scores = evaluate(population);
        if (scores.size() != population.size()) {
            throw std::logic_error("evaluator returned " + std::to_string(scores.size()) + " scores for " +
                                   std::to_string(population.size()) + " genomes");
        }
        evaluated.clear();
        for (std::size_t i = 0; i < population.size(); ++i) {
            if (!std::isfinite(scores[i]) || scores[i] < 0.0) throw std::logic_error("evaluator returned invalid rmse");
            evaluated.push_back({std::move(population[i]), scores[i]});
            if (!have_best || scores[i] < result.rmse) {
                result.genome = evaluated.back().genome;
                result.rmse = scores[i];
                have_best = true;
            }
        }
        result.evaluations += static_cast<std::int64_t>(evaluated.size());
    };
    auto converged = [&] { return config.early_stop_rmse > 0.0 && result.rmse <= config.early_stop_rmse; };

    score(init_population(config, bounds, template_genome, rng));
    if (on_generation) on_generation(0, result.rmse);
    for (int gen = 1; gen <= config.generations && !converged(); ++gen) {
        score(evolve_generation(evaluated, config, bounds, rng));
        result.generations_run = gen;
        if (on_generation) on_generation(gen, result.rmse);
    }
    return result;
}

}  // namespace agrimon
