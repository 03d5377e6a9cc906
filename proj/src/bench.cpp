#include "agrimon/bench.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "agrimon/synthetic.hpp"

namespace agrimon {

JobRequest BenchScenario::job() const {
    const auto weather = synthetic::weather(days, seed);
    const auto field = synthetic::random_field(rows, cols, days, seed);
    JobRequest request;
    request.grid = synthesize_truth(field, weather, revisit_days, noise_sd, seed);
    request.region = Region::full(rows, cols);
    request.weather = weather;
    request.config.pop_size = pop_size;
    request.config.generations = generations;
    request.config.early_stop_rmse = 0.0;
    request.config.seed = seed;
    request.bounds = GenomeBounds::defaults(days);
    request.template_genome = synthetic::template_genome();
    request.revisit_days = revisit_days;
    return request;
}

bool BenchReport::predictions_match() const {
    for (const auto& r : rows) {
        if (r.messages != r.predicted_messages) return false;
    }
    return !rows.empty();
}

const BenchRow* BenchReport::find(StrategyKind strategy, std::size_t workers) const {
    for (const auto& r : rows) {
        if (r.strategy == strategy && r.workers == workers) return &r;
    }
    return nullptr;
}

std::string BenchReport::csv() const {
    std::ostringstream out;
    out << kBenchCsvHeader << '\n';
    out << std::fixed;
    for (const auto& r : rows) {
        out << strategy_name(r.strategy) << ',' << r.workers << ',' << r.pixels << ',' << r.generations << ','
            << r.messages << ',' << r.bytes << ',' << std::setprecision(3) << r.wall_ms << ',' << std::setprecision(3)
            << r.speedup << '\n';
    }
    return out.str();
}

std::string BenchReport::summary() const {
    std::ostringstream out;
    out << std::left << std::setw(14) << "strategy" << std::right << std::setw(8) << "workers" << std::setw(12)
        << "messages" << std::setw(12) << "predicted" << std::setw(14) << "bytes" << std::setw(12) << "wall_ms"
        << std::setw(9) << "speedup" << std::setw(7) << "idle" << '\n';
    out << std::fixed;
    for (const auto& r : rows) {
        std::size_t idle = 0;
        for (double b : r.busy_ms) idle += b == 0.0 ? 1 : 0;
        out << std::left << std::setw(14) << strategy_name(r.strategy) << std::right << std::setw(8) << r.workers
            << std::setw(12) << r.messages << std::setw(12) << r.predicted_messages << std::setw(14) << r.bytes
            << std::setw(12) << std::setprecision(1) << r.wall_ms << std::setw(9) << std::setprecision(2)
            << r.speedup << std::setw(7) << idle << '\n';
    }
    out << (predictions_match() ? "measured message counts match the plan for every run\n"
                                : "MISMATCH between measured and planned message counts\n");
    return out.str();
}

BenchReport bench_strategies(const BenchScenario& scenario) {
    if (scenario.workers.empty()) throw ValidationError("bench scenario lists no worker counts");
    const JobRequest request = scenario.job();
    RunOptions options;
    options.transport = scenario.transport;

    BenchReport report;
    for (StrategyKind kind : scenario.strategies) {
        Strategy strategy{kind, scenario.chunk, scenario.groups};
        std::map<std::size_t, StrategyMetrics> runs;
        auto run = [&](std::size_t workers) -> const StrategyMetrics& {
            auto it = runs.find(workers);
            if (it == runs.end()) {
                // A fixed group count cannot exceed the single-worker baseline's pool.
                Strategy sized = strategy;
                if (static_cast<std::size_t>(sized.groups) > workers) sized.groups = static_cast<int>(workers);
                it = runs.emplace(workers, run_job(request, sized, workers, options).metrics).first;
            }
            return it->second;
        };
        for (std::size_t workers : scenario.workers) {
            const auto& m = run(workers);
            const double baseline = run(1).wall_ms;
            report.rows.push_back({kind, workers, m.pixels, m.generations, m.messages, m.predicted_messages, m.bytes,
                                   m.wall_ms, m.wall_ms > 0.0 ? baseline / m.wall_ms : 1.0, m.busy_ms});
        }
    }
    return report;
}

}  // namespace agrimon
