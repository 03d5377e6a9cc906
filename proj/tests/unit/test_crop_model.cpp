#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace agrimon;
using namespace testing_support;

namespace {

WeatherSeries dry(std::size_t days) {
    std::vector<double> zeros(days, 0.0);
    return WeatherSeries::from_columns(zeros, zeros);
}

CropGenome hand_genome() {
    CropGenome g;
    g.sow_day = 0;
    g.wmax_mm = 100.0;
    g.s0_frac = 0.5;
    g.irr_threshold = 0.0;
    g.irr_depth_mm = 0.0;
    g.growth_rate = 0.1;
    g.lai_max = 5.0;
    return g;
}

}  // namespace

TEST(Simulate, ZeroWeatherKeepsSoilConstant) {
    const auto states = simulate(hand_genome(), dry(3));
    ASSERT_EQ(states.size(), 3u);
    for (const auto& s : states) EXPECT_DOUBLE_EQ(s.soil_mm, 50.0);
}

TEST(Simulate, EmptySoilFreezesGrowth) {
    auto g = hand_genome();
    g.s0_frac = 0.0;
    for (const auto& s : simulate(g, dry(3))) EXPECT_DOUBLE_EQ(s.lai, 0.1);
}

TEST(Simulate, FirstGrowthStepMatchesHandComputation) {
    // 0.1 + 0.1 * 0.1 * (1 - 0.1 / 5) * 1, frozen from the Python reference.
    const auto states = simulate(hand_genome(), dry(3));
    EXPECT_DOUBLE_EQ(states[0].lai, 0.1);
    EXPECT_NEAR(states[1].lai, 0.1098, 1e-15);
    EXPECT_NEAR(states[2].lai, 0.1205388792, 1e-12);
}

TEST(Simulate, LaiIsZeroBeforeSowing) {
    auto g = hand_genome();
    g.sow_day = 4;
    const auto states = simulate(g, dry(8));
    for (int t = 0; t < 4; ++t) EXPECT_EQ(states[t].lai, 0.0);
    EXPECT_DOUBLE_EQ(states[4].lai, 0.1);
    EXPECT_GT(states[5].lai, 0.1);
}

TEST(Simulate, IrrigationFiresBelowThresholdAfterSowing) {
    auto g = hand_genome();
    g.s0_frac = 0.2;
    g.irr_threshold = 0.3;
    g.irr_depth_mm = 25.0;
    g.sow_day = 2;
    const auto states = simulate(g, dry(4));
    EXPECT_EQ(states[0].irrigation_mm, 0.0);
    EXPECT_EQ(states[1].irrigation_mm, 0.0);
    EXPECT_EQ(states[2].irrigation_mm, 25.0);
    EXPECT_DOUBLE_EQ(states[3].soil_mm, 45.0);
}

TEST(Simulate, DrainsAboveCapacity) {
    auto g = hand_genome();
    g.s0_frac = 0.9;
    std::vector<double> rain = {30.0, 0.0};
    std::vector<double> et0 = {0.0, 0.0};
    const auto states = simulate(g, WeatherSeries::from_columns(rain, et0));
    EXPECT_DOUBLE_EQ(states[0].drainage_mm, 20.0);
    EXPECT_DOUBLE_EQ(states[1].soil_mm, 100.0);
}

TEST(Simulate, RejectsEmptyWeather) { EXPECT_THROW(simulate(hand_genome(), WeatherSeries{}), ValidationError); }

TEST(Simulate, OutOfBoundsGenomeNamesTheGene) {
    auto g = hand_genome();
    g.wmax_mm = 10.0;
    try {
        simulate(g, dry(10));
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("wmax_mm"), std::string::npos) << e.what();
    }
    g = hand_genome();
    g.sow_day = 6;  // T/2 = 5
    EXPECT_THROW(simulate(g, dry(10)), ValidationError);
}

TEST(WeatherSeriesTest, RejectsNegativeAndGappedRecords) {
    EXPECT_THROW(WeatherSeries({{0, -1.0, 1.0, 20.0}}), ValidationError);
    EXPECT_THROW(WeatherSeries({{0, 1.0, -1.0, 20.0}}), ValidationError);
    EXPECT_THROW(WeatherSeries({{0, 1.0, 1.0, 20.0}, {2, 1.0, 1.0, 20.0}}), ValidationError);
    EXPECT_THROW(WeatherSeries({{0, 1.0, 1.0, 20.0}, {0, 1.0, 1.0, 20.0}}), ValidationError);
    EXPECT_NO_THROW(WeatherSeries({{0, 0.0, 0.0, 20.0}, {1, 2.0, 3.0, 20.0}}));
}

TEST(Observe, NoiselessSamplingPicksRevisitDays) {
    std::mt19937_64 gen(11);
    const auto states = simulate(random_genome(gen, 16), random_weather(gen, 16));
    const auto obs = observe(states, 8, 0.0, 99);
    ASSERT_EQ(obs.values.size(), 2u);
    EXPECT_EQ(obs.values[0], states[0].lai);
    EXPECT_EQ(obs.values[1], states[8].lai);
}

TEST(Observe, RevisitOneIsTheFullTrajectory) {
    std::mt19937_64 gen(12);
    const auto states = simulate(random_genome(gen, 30), random_weather(gen, 30));
    const auto obs = observe(states, 1);
    ASSERT_EQ(obs.values.size(), states.size());
    for (std::size_t t = 0; t < states.size(); ++t) EXPECT_EQ(obs.values[t], states[t].lai);
}

TEST(Observe, NoisySeriesReplaysWithTheSameSeed) {
    std::mt19937_64 gen(13);
    const auto states = simulate(random_genome(gen, 40), random_weather(gen, 40));
    const auto a = observe(states, 8, 0.2, 7);
    const auto b = observe(states, 8, 0.2, 7);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.values, observe(states, 8, 0.2, 8).values);
    for (double v : a.values) EXPECT_GE(v, 0.0);
}

TEST(Observe, LengthIsCeilOfSeasonOverRevisit) {
    const auto states = simulate(hand_genome(), dry(17));
    EXPECT_EQ(observe(states, 8).values.size(), 3u);
    EXPECT_EQ(observe(states, 17).values.size(), 1u);
    EXPECT_EQ(observe(states, 100).values.size(), 1u);
    EXPECT_EQ(sample_count(120, 8), 15u);
}

TEST(Observe, RejectsBadArguments) {
    const auto states = simulate(hand_genome(), dry(4));
    EXPECT_THROW(observe(states, 0), ValidationError);
    EXPECT_THROW(observe({}, 1), ValidationError);
    EXPECT_THROW(observe(states, 1, -0.1), ValidationError);
}

TEST(SimulateSamples, MatchesObserveOfSimulate) {
    std::mt19937_64 gen(14);
    for (int i = 0; i < 50; ++i) {
        const auto w = random_weather(gen, 90);
        const auto g = random_genome(gen, 90);
        EXPECT_EQ(simulate_samples(g, w, 7), observe(simulate(g, w), 7).values);
    }
}

// Property checks over randomized genomes and forcing.

TEST(ModelProperties, AgreesWithIndependentReference) {
    std::mt19937_64 gen(21);
    for (int i = 0; i < 300; ++i) {
        const std::size_t days = 20 + gen() % 150;
        const auto w = random_weather(gen, days);
        const auto g = random_genome(gen, days);
        const auto states = simulate(g, w);
        const auto ref = oracle::run(to_oracle(g), rain_of(w), et0_of(w));
        ASSERT_EQ(states.size(), ref.size());
        for (std::size_t t = 0; t < days; ++t) {
            ASSERT_NEAR(states[t].soil_mm, ref[t].soil, 1e-9);
            ASSERT_NEAR(states[t].lai, ref[t].lai, 1e-12);
            ASSERT_NEAR(states[t].et_actual_mm, ref[t].et, 1e-9);
            ASSERT_NEAR(states[t].drainage_mm, ref[t].drain, 1e-9);
            ASSERT_EQ(states[t].irrigation_mm, ref[t].irr);
        }
    }
}

TEST(ModelProperties, WaterBalanceBoundsAndFactors) {
    std::mt19937_64 gen(22);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t days = 10 + gen() % 120;
        const auto w = random_weather(gen, days);
        const auto g = random_genome(gen, days);
        const auto s = simulate(g, w);
        for (std::size_t t = 0; t < days; ++t) {
            ASSERT_GE(s[t].soil_mm, 0.0);
            ASSERT_LE(s[t].soil_mm, g.wmax_mm);
            ASSERT_GE(s[t].lai, 0.0);
            ASSERT_LE(s[t].lai, g.lai_max);
            ASSERT_GE(s[t].et_actual_mm, 0.0);
            ASSERT_GE(s[t].irrigation_mm, 0.0);
            ASSERT_GE(s[t].drainage_mm, 0.0);
            ASSERT_GE(s[t].water_factor, 0.0);
            ASSERT_LE(s[t].water_factor, 1.0);
            ASSERT_GE(s[t].cover_factor, 0.0);
            ASSERT_LE(s[t].cover_factor, 1.0);
            if (t + 1 < days) {
                const double expected =
                    s[t].soil_mm + w[t].rain_mm + s[t].irrigation_mm - s[t].et_actual_mm - s[t].drainage_mm;
                ASSERT_LE(std::abs(s[t + 1].soil_mm - expected), 1e-9);
            }
            if (t > static_cast<std::size_t>(g.sow_day)) ASSERT_GE(s[t].lai, s[t - 1].lai);
        }
    }
}

TEST(ModelProperties, RepeatedCallsAreBitIdentical) {
    std::mt19937_64 gen(23);
    for (int i = 0; i < 20; ++i) {
        const auto w = random_weather(gen, 100);
        const auto g = random_genome(gen, 100);
        const auto a = simulate(g, w);
        const auto b = simulate(g, w);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t t = 0; t < a.size(); ++t) {
            ASSERT_TRUE(same_bits(a[t].soil_mm, b[t].soil_mm));
            ASSERT_TRUE(same_bits(a[t].lai, b[t].lai));
        }
    }
}

TEST(Genome, NamesRoundTripAndIntegerRounding) {
    for (Gene g : kAllGenes) EXPECT_EQ(gene_from_name(gene_name(g)), g);
    EXPECT_FALSE(gene_from_name("nope").has_value());
    CropGenome g;
    g.set(Gene::SowDay, 4.5);
    EXPECT_EQ(g.sow_day, 5);
    g.set(Gene::SowDay, 4.49);
    EXPECT_EQ(g.sow_day, 4);
    EXPECT_EQ(CropGenome::from_array(g.to_array()), g);
}

TEST(Genome, DefaultBoundsFollowSeasonLength) {
    const auto b = GenomeBounds::defaults(121);
    EXPECT_EQ(b[Gene::SowDay].low, 0.0);
    EXPECT_EQ(b[Gene::SowDay].high, 60.0);
    EXPECT_EQ(b[Gene::WmaxMm], (Interval{50.0, 300.0}));
    EXPECT_EQ(b[Gene::GrowthRate], (Interval{0.01, 0.3}));
    EXPECT_EQ(b[Gene::LaiMax], (Interval{1.0, 8.0}));
    EXPECT_EQ(b[Gene::IrrDepthMm], (Interval{0.0, 50.0}));
}
