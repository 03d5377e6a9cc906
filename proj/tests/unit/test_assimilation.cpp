#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "agrimon/assimilation.hpp"
#include "support.hpp"

using namespace agrimon;
using namespace testing_support;

namespace {

struct Scene {
    WeatherSeries weather;
    CropGenome truth;
    ObservableSeries observed;
};

Scene scene(std::uint64_t seed, std::size_t days = 64, int k = 8) {
    Scene s;
    s.weather = synthetic::weather(days, seed);
    s.truth = synthetic::random_field(1, 1, days, seed).genomes[0];
    s.observed = observe(simulate(s.truth, s.weather), k);
    return s;
}

GaConfig small_config(std::uint64_t seed = 5) {
    GaConfig c;
    c.pop_size = 12;
    c.generations = 8;
    c.seed = seed;
    c.early_stop_rmse = 0.0;
    return c;
}

std::vector<EvaluatedGenome> evaluate_all(const std::vector<CropGenome>& pop, const Scene& s) {
    std::vector<EvaluatedGenome> out;
    for (const auto& g : pop) out.push_back({g, fitness(g, s.observed, s.weather)});
    return out;
}

}  // namespace

TEST(Fitness, ZeroOnOwnNoiselessSeries) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto s = scene(seed);
        EXPECT_EQ(fitness(s.truth, s.observed, s.weather), 0.0);
    }
}

TEST(Fitness, HandComputedRmse) {
    const std::vector<double> sim = {1.0, 2.0};
    const std::vector<double> obs = {1.0, 4.0};
    EXPECT_DOUBLE_EQ(rmse(sim, obs), 1.4142135623730951);
}

TEST(Fitness, PureAndLengthChecked) {
    auto s = scene(4);
    auto g = s.truth;
    g.wmax_mm += 20.0;
    const double a = fitness(g, s.observed, s.weather);
    EXPECT_TRUE(same_bits(a, fitness(g, s.observed, s.weather)));
    EXPECT_GT(a, 0.0);
    s.observed.values.pop_back();
    EXPECT_THROW(fitness(g, s.observed, s.weather), ValidationError);
    EXPECT_THROW(rmse(std::vector<double>{1.0}, std::vector<double>{}), ValidationError);
}

TEST(RmseProperties, SymmetryScalingIdentity) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + gen() % 40;
        std::vector<double> x(n), y(n), ax(n), ay(n);
        const double a = u(gen);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = u(gen);
            y[j] = u(gen);
            ax[j] = a * x[j];
            ay[j] = a * y[j];
        }
        const double r = rmse(x, y);
        EXPECT_EQ(rmse(x, x), 0.0);
        EXPECT_EQ(r, rmse(y, x));
        EXPECT_NEAR(rmse(ax, ay), std::abs(a) * r, 1e-12 * (1.0 + std::abs(a) * r));
        EXPECT_NEAR(r, oracle::rmse(x, y), 1e-12);
    }
}

TEST(GaConfigTest, ValidationRules) {
    EXPECT_NO_THROW(GaConfig{}.validate());
    auto bad = [](auto mutate) {
        GaConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), ValidationError);
    };
    bad([](GaConfig& c) { c.free_genes.clear(); });
    bad([](GaConfig& c) { c.pop_size = 1; });
    bad([](GaConfig& c) { c.tournament_size = 0; });
    bad([](GaConfig& c) { c.tournament_size = c.pop_size + 1; });
    bad([](GaConfig& c) { c.elitism = c.pop_size; });
    bad([](GaConfig& c) { c.elitism = -1; });
    bad([](GaConfig& c) { c.crossover_rate = 1.5; });
    bad([](GaConfig& c) { c.mutation_rate = -0.1; });
    bad([](GaConfig& c) { c.early_stop_rmse = -1.0; });
    bad([](GaConfig& c) { c.generations = -1; });
}

TEST(InitPopulation, OneFreeGeneStaysInBounds) {
    GaConfig c;
    c.pop_size = 4;
    c.tournament_size = 2;
    c.free_genes = {Gene::S0Frac};
    auto bounds = GenomeBounds::defaults(64);
    bounds[Gene::S0Frac] = {0.0, 1.0};
    const auto tmpl = synthetic::template_genome();
    Rng rng(9);
    const auto pop = init_population(c, bounds, tmpl, rng);
    ASSERT_EQ(pop.size(), 4u);
    for (const auto& g : pop) {
        EXPECT_GE(g.s0_frac, 0.0);
        EXPECT_LE(g.s0_frac, 1.0);
        auto copy = g;
        copy.s0_frac = tmpl.s0_frac;
        EXPECT_EQ(copy, tmpl);
    }
    EXPECT_NE(pop[0].s0_frac, pop[1].s0_frac);
}

TEST(InitPopulation, ReplaysWithSameSeedAndRejectsDegenerateBounds) {
    const GaConfig c;
    const auto bounds = GenomeBounds::defaults(64);
    const auto tmpl = synthetic::template_genome();
    Rng a(17), b(17);
    EXPECT_EQ(init_population(c, bounds, tmpl, a), init_population(c, bounds, tmpl, b));
    for (const auto& g : init_population(c, bounds, tmpl, a)) EXPECT_TRUE(bounds.contains(g));

    auto flat = bounds;
    flat[Gene::WmaxMm] = {100.0, 100.0};
    EXPECT_THROW(init_population(c, flat, tmpl, a), ValidationError);
}

TEST(EvolveGeneration, NoVariationClonesTheBest) {
    const auto s = scene(2);
    GaConfig c = small_config();
    c.mutation_rate = 0.0;
    c.crossover_rate = 0.0;
    c.elitism = c.pop_size - 1;
    const auto bounds = GenomeBounds::defaults(64);
    Rng rng(3);
    auto evaluated = evaluate_all(init_population(c, bounds, synthetic::template_genome(), rng), s);
    const auto next = evolve_generation(evaluated, c, bounds, rng);
    ASSERT_EQ(next.size(), evaluated.size());
    for (const auto& g : next) {
        const bool from_parent =
            std::any_of(evaluated.begin(), evaluated.end(), [&](const auto& e) { return e.genome == g; });
        EXPECT_TRUE(from_parent);
    }
    auto sorted = evaluated;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.rmse < y.rmse; });
    for (int i = 0; i < c.elitism; ++i) EXPECT_EQ(next[i], sorted[i].genome);
}

TEST(EvolveGeneration, ElitismKeepsTheIncumbent) {
    const auto bounds = GenomeBounds::defaults(64);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = scene(seed);
        const auto c = small_config(seed);
        Rng rng(seed);
        const auto evaluated = evaluate_all(init_population(c, bounds, synthetic::template_genome(), rng), s);
        const auto best = std::min_element(evaluated.begin(), evaluated.end(),
                                           [](const auto& x, const auto& y) { return x.rmse < y.rmse; });
        const auto next = evolve_generation(evaluated, c, bounds, rng);
        EXPECT_NE(std::find(next.begin(), next.end(), best->genome), next.end());
        for (const auto& g : next) EXPECT_TRUE(bounds.contains(g));
    }
}

TEST(EvolveGeneration, IdenticalPopulationIsClosedUnderNoMutation) {
    GaConfig c = small_config();
    c.mutation_rate = 0.0;
    const auto g = synthetic::template_genome();
    std::vector<EvaluatedGenome> evaluated(c.pop_size, EvaluatedGenome{g, 0.5});
    Rng rng(1);
    for (const auto& out : evolve_generation(evaluated, c, GenomeBounds::defaults(64), rng)) EXPECT_EQ(out, g);
}

TEST(EvolveGeneration, RejectsWrongPopulationSize) {
    const GaConfig c = small_config();
    std::vector<EvaluatedGenome> evaluated(3, EvaluatedGenome{synthetic::template_genome(), 0.1});
    Rng rng(1);
    EXPECT_THROW(evolve_generation(evaluated, c, GenomeBounds::defaults(64), rng), ValidationError);
}

TEST(AssimilatePixel, EmptyFreeGenesIsRejected) {
    const auto s = scene(1);
    GaConfig c = small_config();
    c.free_genes.clear();
    EXPECT_THROW(assimilate_pixel(s.observed, s.weather, c, GenomeBounds::defaults(64), synthetic::template_genome()),
                 ValidationError);
}

TEST(AssimilatePixel, SameSeedIsBitIdentical) {
    const auto s = scene(6);
    const auto c = small_config(77);
    const auto bounds = GenomeBounds::defaults(64);
    const auto a = assimilate_pixel(s.observed, s.weather, c, bounds, synthetic::template_genome());
    const auto b = assimilate_pixel(s.observed, s.weather, c, bounds, synthetic::template_genome());
    EXPECT_EQ(a, b);
    EXPECT_TRUE(same_bits(a.rmse, b.rmse));
    auto other = c;
    other.seed = 78;
    EXPECT_NE(assimilate_pixel(s.observed, s.weather, other, bounds, synthetic::template_genome()).genome, a.genome);
}

TEST(AssimilatePixel, EvaluationAccountingAndMonotoneBest) {
    const auto bounds = GenomeBounds::defaults(64);
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto s = scene(seed);
        const auto c = small_config(seed);
        std::vector<double> trace;
        const auto r = assimilate_pixel(s.observed, s.weather, c, bounds, synthetic::template_genome(),
                                        sequential_evaluator(s.observed, s.weather),
                                        [&](int, double best) { trace.push_back(best); });
        EXPECT_EQ(r.generations_run, c.generations);
        EXPECT_EQ(r.evaluations, static_cast<std::int64_t>(c.pop_size) * (r.generations_run + 1));
        for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
        EXPECT_TRUE(bounds.contains(r.genome));
        EXPECT_EQ(r.rmse, fitness(r.genome, s.observed, s.weather));
    }
}

TEST(AssimilatePixel, EarlyStopCutsGenerations) {
    const auto s = scene(3);
    GaConfig c = small_config();
    c.early_stop_rmse = 10.0;  // the first population already qualifies
    const auto r = assimilate_pixel(s.observed, s.weather, c, GenomeBounds::defaults(64), synthetic::template_genome());
    EXPECT_EQ(r.generations_run, 0);
    EXPECT_EQ(r.evaluations, c.pop_size);
}

TEST(AssimilatePixel, RecoversMostTruthGenomes) {
    // A handful of truths are weakly identifiable, so this is a rate, not a per-pixel promise.
    const auto field = synthetic::random_field(4, 4, 120, 12);
    const auto weather = synthetic::weather(120, 12);
    int ok = 0;
    for (std::size_t i = 0; i < field.genomes.size(); ++i) {
        const auto& truth = field.genomes[i];
        GaConfig c;
        c.seed = 100 + i;
        const auto r = assimilate_pixel(observe(simulate(truth, weather), 8), weather, c, GenomeBounds::defaults(120),
                                        synthetic::template_genome());
        const bool hit = std::abs(r.genome.sow_day - truth.sow_day) <= 2 &&
                         std::abs(r.genome.wmax_mm - truth.wmax_mm) <= 0.10 * truth.wmax_mm &&
                         std::abs(r.genome.growth_rate - truth.growth_rate) <= 0.20 * truth.growth_rate;
        ok += hit ? 1 : 0;
    }
    EXPECT_GE(ok, 14);
}

TEST(ValidateSearch, BoundsMustSitInsideModelRanges) {
    const auto tmpl = synthetic::template_genome();
    auto bounds = GenomeBounds::defaults(64);
    EXPECT_NO_THROW(validate_search(GaConfig{}, bounds, tmpl, 64));
    bounds[Gene::WmaxMm].high = 400.0;
    EXPECT_THROW(validate_search(GaConfig{}, bounds, tmpl, 64), ValidationError);
}
