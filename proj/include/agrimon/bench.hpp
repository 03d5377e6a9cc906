#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agrimon/distribution.hpp"

namespace agrimon {

/// Synthetic workload for comparing distribution strategies. Defaults are the
/// reference scenario: 16x16 pixels, 4 workers, pop 32, 50 generations, chunk 1.
struct BenchScenario {
    std::uint32_t rows = 16;
    std::uint32_t cols = 16;
    std::vector<std::size_t> workers = {4};
    std::vector<StrategyKind> strategies = {StrategyKind::Pixel, StrategyKind::Population, StrategyKind::Hierarchical};
    int pop_size = 32;
    int generations = 50;
    int chunk = 1;
    /// 0 selects floor(sqrt(workers)).
    int groups = 0;
    std::size_t days = 120;
    int revisit_days = 8;
    double noise_sd = 0.0;
    std::uint64_t seed = 7;
    TransportKind transport = TransportKind::InProcess;

    /// The job every strategy runs. Early stopping is disabled so message counts are exact.
    JobRequest job() const;
};

struct BenchRow {
    StrategyKind strategy = StrategyKind::Pixel;
    std::size_t workers = 0;
    std::size_t pixels = 0;
    int generations = 0;
    std::int64_t messages = 0;
    std::int64_t predicted_messages = 0;
    std::int64_t bytes = 0;
    double wall_ms = 0.0;
    /// wall(1 worker) / wall(this row), same strategy.
    double speedup = 1.0;
    std::vector<double> busy_ms;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    bool predictions_match() const;
    const BenchRow* find(StrategyKind strategy, std::size_t workers) const;
    /// Header `strategy,workers,pixels,generations,messages,bytes,wall_ms,speedup`.
    std::string csv() const;
    std::string summary() const;
};

inline constexpr const char* kBenchCsvHeader = "strategy,workers,pixels,generations,messages,bytes,wall_ms,speedup";

BenchReport bench_strategies(const BenchScenario& scenario);

}  // namespace agrimon
