#include <gtest/gtest.h>

#include <sstream>

#include "agrimon/bench.hpp"
#include "agrimon/json_io.hpp"
#include "agrimon/scoring.hpp"
#include "support.hpp"

using namespace agrimon;
using namespace testing_support;

namespace {

BenchScenario tiny() {
    BenchScenario s;
    s.rows = 3;
    s.cols = 3;
    s.pop_size = 8;
    s.generations = 3;
    s.days = 48;
    s.workers = {1, 4};
    return s;
}

}  // namespace

TEST(Bench, OrderingAndPredictionsOnASmallScenario) {
    const auto report = bench_strategies(tiny());
    EXPECT_TRUE(report.predictions_match());
    ASSERT_EQ(report.rows.size(), 6u);
    const auto* pixel = report.find(StrategyKind::Pixel, 4);
    const auto* pop = report.find(StrategyKind::Population, 4);
    const auto* hier = report.find(StrategyKind::Hierarchical, 4);
    ASSERT_TRUE(pixel && pop && hier);
    EXPECT_LT(pixel->messages, hier->messages);
    EXPECT_LT(hier->messages, pop->messages);
    for (auto kind : {StrategyKind::Pixel, StrategyKind::Population, StrategyKind::Hierarchical}) {
        EXPECT_EQ(report.find(kind, 1)->speedup, 1.0);
    }
}

TEST(Bench, CsvHasOneLinePerRow) {
    const auto report = bench_strategies(tiny());
    std::istringstream in(report.csv());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kBenchCsvHeader);
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    EXPECT_EQ(rows, 6);
    EXPECT_FALSE(report.summary().empty());
}

TEST(Bench, ScenarioJsonDefaultsAndErrors) {
    const auto s = nlohmann::json::parse(R"({"rows": 4, "workers": 2, "strategies": ["PIXEL"]})").get<BenchScenario>();
    EXPECT_EQ(s.rows, 4u);
    EXPECT_EQ(s.cols, 16u);
    EXPECT_EQ(s.workers, (std::vector<std::size_t>{2}));
    EXPECT_EQ(s.strategies, (std::vector<StrategyKind>{StrategyKind::Pixel}));
    EXPECT_ANY_THROW(nlohmann::json::parse(R"({"bogus": 1})").get<BenchScenario>());
    EXPECT_ANY_THROW(nlohmann::json::parse(R"({"strategies": ["FAST"]})").get<BenchScenario>());
    EXPECT_ANY_THROW(nlohmann::json::parse(R"({"workers": 0})").get<BenchScenario>());
}

TEST(Scoring, TruthScoresPerfectlyAgainstItself) {
    const auto field = synthetic::random_field(4, 4, 120, 3);
    const auto score = score_recovery(field, field_as_param_map(field));
    EXPECT_EQ(score.pixels, 16u);
    EXPECT_EQ(score.recovered, 16u);
    EXPECT_EQ(score.max_sow_error, 0.0);
    EXPECT_EQ(score.fraction(), 1.0);
}

TEST(Scoring, ToleranceEdges) {
    CropGenome truth = synthetic::template_genome();
    truth.sow_day = 20;
    truth.wmax_mm = 100.0;
    truth.growth_rate = 0.1;
    auto est = truth;
    est.sow_day = 22;
    est.wmax_mm = 110.0;
    est.growth_rate = 0.12;
    EXPECT_TRUE(recovered(truth, est, {}));
    est.sow_day = 23;
    EXPECT_FALSE(recovered(truth, est, {}));
    est.sow_day = 20;
    est.wmax_mm = 111.0;
    EXPECT_FALSE(recovered(truth, est, {}));
}
