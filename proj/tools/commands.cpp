#include "commands.hpp"

#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include "CLI11.hpp"

#include "agrimon/bench.hpp"
#include "agrimon/http_api.hpp"
#include "agrimon/ingest.hpp"
#include "agrimon/json_io.hpp"
#include "agrimon/portal.hpp"
#include "agrimon/scoring.hpp"
#include "agrimon/synthetic.hpp"

namespace agrimon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    auto p = prefix;
    p += suffix;
    return p;
}

/// "row0,col0,row1,col1" or "full".
std::optional<Region> parse_region(const std::string& text) {
    if (text.empty() || text == "full") return std::nullopt;
    std::array<long long, 4> v{};
    std::istringstream in(text);
    for (std::size_t i = 0; i < 4; ++i) {
        if (!(in >> v[i]) || v[i] < 0 || v[i] > 0xFFFFFFFFLL) throw ValidationError("bad --region '" + text + "'");
        if (i < 3 && in.get() != ',') throw ValidationError("bad --region '" + text + "'");
    }
    if (in.peek() != EOF) throw ValidationError("bad --region '" + text + "'");
    return Region{static_cast<std::uint32_t>(v[0]), static_cast<std::uint32_t>(v[1]), static_cast<std::uint32_t>(v[2]),
                  static_cast<std::uint32_t>(v[3])};
}

void print_report(const IngestReport& report) {
    std::cout << "inserted " << report.inserted << " duplicates " << report.duplicates << " rejected "
              << report.rejected << '\n';
    for (const auto& r : report.rejections) std::cout << "  rejected " << r.locator << ": " << r.reason << '\n';
    if (report.failure) std::cout << "  failure: " << *report.failure << '\n';
}

// ---------------------------------------------------------------------------

struct GenOptions {
    std::uint32_t rows = 8;
    std::uint32_t cols = 8;
    std::size_t days = 120;
    int revisit = 8;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string station = "SYN1";
    std::string season_start = "2015-06-01";
    fs::path out;
};

int gen_synthetic(const GenOptions& o) {
    if (o.rows == 0 || o.cols == 0 || o.days == 0) throw ValidationError("rows, cols and days must be positive");
    if (o.revisit < 1) throw ValidationError("revisit must be >= 1");
    if (!(o.noise >= 0.0)) throw ValidationError("noise must be >= 0");
    const auto start = parse_date(o.season_start);
    if (!start) throw ValidationError("bad --season-start " + o.season_start);

    const auto weather = synthetic::weather(o.days, o.seed);
    const auto field = synthetic::random_field(o.rows, o.cols, o.days, o.seed);
    const auto grid = synthesize_truth(field, weather, o.revisit, o.noise, o.seed);

    save_raster(grid, with_suffix(o.out, ".agr1"));
    json truth = field;
    truth["seed"] = o.seed;
    truth["noise_sd"] = o.noise;
    write_text_file(with_suffix(o.out, ".truth.json"), truth.dump(2) + "\n");
    write_text_file(with_suffix(o.out, ".weather.csv"), weather_to_csv(weather, o.station, *start));
    write_text_file(with_suffix(o.out, ".meta.json"),
                    json(RasterMeta{o.days, o.revisit, o.season_start, o.station, "synthetic seed " +
                                                                                     std::to_string(o.seed)})
                            .dump(2) +
                        "\n");
    std::cout << "wrote " << with_suffix(o.out, ".agr1").string() << " (" << grid.rows() << "x" << grid.cols() << "x"
              << grid.bands() << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AssimilateOptions {
    fs::path raster;
    fs::path weather;
    std::string region;
    std::string strategy = "pixel";
    std::size_t workers = 1;
    int chunk = 1;
    int groups = 0;
    int pop = 48;
    int gens = 120;
    std::uint64_t seed = 42;
    double early_stop = 1e-6;
    int revisit = 0;
    std::string transport = "inproc";
    fs::path out;
};

int assimilate(const AssimilateOptions& o) {
    const auto kind = strategy_from_name(o.strategy);
    if (!kind) throw ValidationError("unknown strategy '" + o.strategy + "'");
    const auto transport = transport_from_name(o.transport);
    if (!transport) throw ValidationError("unknown transport '" + o.transport + "'");

    JobRequest request;
    request.grid = load_raster(o.raster);
    const auto weather = weather_from_csv(read_text_file(o.weather));
    request.weather = weather.series;
    request.region = parse_region(o.region).value_or(Region::full(request.grid.rows(), request.grid.cols()));
    request.region.require_within(request.grid.rows(), request.grid.cols());
    request.config.pop_size = o.pop;
    request.config.generations = o.gens;
    request.config.seed = o.seed;
    request.config.early_stop_rmse = o.early_stop;
    request.bounds = GenomeBounds::defaults(request.weather.season_len());
    request.template_genome = synthetic::template_genome();

    int revisit = o.revisit;
    auto sidecar = o.raster;
    sidecar.replace_extension(".meta.json");
    if (revisit == 0 && fs::exists(sidecar)) revisit = json::parse(read_text_file(sidecar)).get<RasterMeta>().revisit_days;
    if (revisit == 0) revisit = infer_revisit_days(request.weather.season_len(), request.grid.bands());
    request.revisit_days = revisit;

    Strategy strategy{*kind, o.chunk, o.groups};
    RunOptions options;
    options.transport = *transport;
    const auto output = run_job(request, strategy, o.workers, options);

    auto map_path = o.out;
    auto metrics_path = o.out;
    metrics_path.replace_extension(".metrics.csv");
    write_text_file(map_path, json(output.map).dump(1) + "\n");
    write_text_file(metrics_path, metrics_csv(output.metrics));

    double worst = 0.0;
    for (const auto& e : output.map.entries) worst = std::max(worst, e.result.rmse);
    std::cout << output.map.entries.size() << " pixels, max rmse " << std::setprecision(6) << worst << ", "
              << output.metrics.messages << " messages, " << std::fixed << std::setprecision(1)
              << output.metrics.wall_ms << " ms\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
    fs::path scenario;
    std::vector<std::size_t> workers;
    fs::path out;
};

int bench(const BenchOptions& o) {
    BenchScenario scenario;
    if (!o.scenario.empty()) {
        json j;
        try {
            j = json::parse(read_text_file(o.scenario));
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
        }
        j.get_to(scenario);
    }
    if (!o.workers.empty()) scenario.workers = o.workers;
    const auto report = bench_strategies(scenario);
    if (!o.out.empty()) write_text_file(o.out, report.csv());
    std::cout << report.csv();
    std::cerr << report.summary();
    return report.predictions_match() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct IngestOptions {
    fs::path data_dir = "data";
    fs::path file;
    fs::path inbox;
    fs::path archive;
    bool watch = false;
    int interval_ms = 1000;
};

int ingest(const IngestOptions& o) {
    ObservationStore store(o.data_dir);
    if (!o.file.empty()) {
        const auto parsed = parse_file(o.file);
        auto report = store.ingest_batch(parsed.records);
        report.rejected += parsed.report.rejected;
        report.rejections.insert(report.rejections.begin(), parsed.report.rejections.begin(),
                                 parsed.report.rejections.end());
        if (parsed.report.failure) report.failure = parsed.report.failure;
        print_report(report);
        return report.failure ? kExitFailure : kExitOk;
    }
    const auto archive = o.archive.empty() ? o.inbox / "archive" : o.archive;
    if (!o.watch) {
        const auto report = process_inbox(store, o.inbox, archive);
        print_report(report);
        return kExitOk;
    }
    std::jthread watcher([&](std::stop_token stop) {
        watch_inbox(store, o.inbox, archive, std::chrono::milliseconds(o.interval_ms), stop, print_report);
    });
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    fs::path data_dir = "data";
    std::size_t max_concurrent_jobs = 1;
    std::string transport = "inproc";
    std::vector<fs::path> rasters;
    std::vector<fs::path> weather;
};

int serve(const ServeOptions& o) {
    const auto transport = transport_from_name(o.transport);
    if (!transport) throw ValidationError("unknown transport '" + o.transport + "'");
    Portal portal({o.data_dir, o.max_concurrent_jobs, *transport});

    for (const auto& w : o.weather) {
        const auto parsed = parse_file(w);
        std::cout << "weather " << w.filename().string() << ": ";
        print_report(portal.store().ingest_batch(parsed.records));
    }
    for (const auto& r : o.rasters) {
        auto sidecar = r;
        sidecar.replace_extension(".meta.json");
        if (!fs::exists(sidecar)) throw ValidationError("raster " + r.string() + " has no " + sidecar.filename().string());
        const auto meta = json::parse(read_text_file(sidecar)).get<RasterMeta>();
        portal.register_raster(r.stem().string(), load_raster(r), meta);
        std::cout << "raster " << r.stem().string() << " registered\n";
    }

    HttpApi api(portal);
    const int port = api.bind(o.host, o.port);
    portal.start();
    api.start();
    std::cout << "listening on http://" << o.host << ":" << port << std::endl;

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "shutting down\n";
    api.stop();
    portal.stop();
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScoreOptions {
    fs::path truth;
    fs::path result;
    RecoveryTolerance tol;
    double require = 0.0;
};

int score(const ScoreOptions& o) {
    const auto truth = json::parse(read_text_file(o.truth)).get<ParamField>();
    const auto doc = json::parse(read_text_file(o.result));
    const ParamMap map = doc.contains("entries") ? doc.get<ParamMap>() : field_as_param_map(doc.get<ParamField>());
    const auto s = score_recovery(truth, map, o.tol);
    std::cout << "recovered " << s.recovered << "/" << s.pixels << " pixels (" << std::fixed << std::setprecision(1)
              << 100.0 * s.fraction() << "%)\n"
              << std::setprecision(4) << "max |sow_day error| " << s.max_sow_error << " days\n"
              << "max wmax_mm relative error " << s.max_wmax_rel_error << "\n"
              << "max growth_rate relative error " << s.max_growth_rel_error << "\n";
    return s.fraction() + 1e-12 >= o.require ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, char** argv) {
    // Signals are taken synchronously by the long-running subcommands.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);

    CLI::App app{"Crop parameter assimilation over raster time series"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic raster, its truth field and weather");
    gen_cmd->add_option("--rows", gen.rows, "Grid rows")->capture_default_str();
    gen_cmd->add_option("--cols", gen.cols, "Grid columns")->capture_default_str();
    gen_cmd->add_option("--days", gen.days, "Season length")->capture_default_str();
    gen_cmd->add_option("--revisit", gen.revisit, "Days between observations")->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise, "Observation noise sd")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    gen_cmd->add_option("--station", gen.station, "Station id written to the weather CSV")->capture_default_str();
    gen_cmd->add_option("--season-start", gen.season_start, "Date of season day 0")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output prefix")->required();

    AssimilateOptions as;
    auto* as_cmd = app.add_subcommand("assimilate", "Estimate per-pixel parameters of a raster");
    as_cmd->add_option("--raster", as.raster, "AGR1 observation raster")->required()->check(CLI::ExistingFile);
    as_cmd->add_option("--weather", as.weather, "Weather CSV covering the season")->required()->check(CLI::ExistingFile);
    as_cmd->add_option("--region", as.region, "row0,col0,row1,col1 (inclusive) or full");
    as_cmd->add_option("--strategy", as.strategy, "pixel | population | hierarchical")->capture_default_str();
    as_cmd->add_option("--workers", as.workers, "Worker count")->capture_default_str();
    as_cmd->add_option("--chunk", as.chunk, "Pixels per task (pixel strategy)")->capture_default_str();
    as_cmd->add_option("--groups", as.groups, "Worker groups (hierarchical; 0 = floor(sqrt(workers)))")
        ->capture_default_str();
    as_cmd->add_option("--pop", as.pop, "GA population")->capture_default_str();
    as_cmd->add_option("--gens", as.gens, "GA generations")->capture_default_str();
    as_cmd->add_option("--seed", as.seed, "Master seed")->capture_default_str();
    as_cmd->add_option("--early-stop", as.early_stop, "Stop at this rmse; 0 disables")->capture_default_str();
    as_cmd->add_option("--revisit", as.revisit, "Revisit days; 0 reads the sidecar or infers")->capture_default_str();
    as_cmd->add_option("--transport", as.transport, "inproc | socket")->capture_default_str();
    as_cmd->add_option("--out", as.out, "ParamMap JSON path; metrics go next to it as .metrics.csv")->required();

    BenchOptions be;
    auto* be_cmd = app.add_subcommand("bench", "Compare distribution strategies on a synthetic workload");
    be_cmd->add_option("--scenario", be.scenario, "Scenario JSON; defaults apply when omitted")
        ->check(CLI::ExistingFile);
    be_cmd->add_option("--workers", be.workers, "Override worker counts");
    be_cmd->add_option("--out", be.out, "Also write the CSV here");

    IngestOptions in;
    auto* in_cmd = app.add_subcommand("ingest", "Load weather CSV or sensor XML into the store");
    in_cmd->add_option("--data-dir", in.data_dir, "Store directory")->envname("AGRIMON_DATA_DIR")->capture_default_str();
    auto* file_opt = in_cmd->add_option("--file", in.file, "A single .csv or .xml file")->check(CLI::ExistingFile);
    auto* inbox_opt = in_cmd->add_option("--inbox", in.inbox, "Directory of files to ingest")->check(CLI::ExistingDirectory);
    file_opt->excludes(inbox_opt);
    in_cmd->add_option("--archive", in.archive, "Where processed inbox files go (default <inbox>/archive)");
    in_cmd->add_flag("--watch", in.watch, "Keep polling the inbox")->needs(inbox_opt);
    in_cmd->add_option("--interval-ms", in.interval_ms, "Polling interval")->capture_default_str();

    ServeOptions sv;
    auto* sv_cmd = app.add_subcommand("serve", "Run the HTTP portal");
    sv_cmd->add_option("--host", sv.host, "Bind address")->envname("AGRIMON_HOST")->capture_default_str();
    sv_cmd->add_option("--port", sv.port, "Port; 0 picks a free one")->envname("AGRIMON_PORT")->capture_default_str();
    sv_cmd->add_option("--data-dir", sv.data_dir, "Data directory")->envname("AGRIMON_DATA_DIR")->capture_default_str();
    sv_cmd->add_option("--max-concurrent-jobs", sv.max_concurrent_jobs, "Jobs running at once")
        ->envname("AGRIMON_MAX_CONCURRENT_JOBS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sv_cmd->add_option("--transport", sv.transport, "inproc | socket")->capture_default_str();
    sv_cmd->add_option("--raster", sv.rasters, "Register an .agr1 file (needs its .meta.json)")
        ->check(CLI::ExistingFile);
    sv_cmd->add_option("--weather", sv.weather, "Ingest a weather CSV before serving")->check(CLI::ExistingFile);

    ScoreOptions sc;
    auto* sc_cmd = app.add_subcommand("score", "Compare a result against a truth field");
    sc_cmd->add_option("--truth", sc.truth, "Truth JSON from gen-synthetic")->required()->check(CLI::ExistingFile);
    sc_cmd->add_option("--result", sc.result, "ParamMap JSON (or a truth file)")->required()->check(CLI::ExistingFile);
    sc_cmd->add_option("--sow-tol", sc.tol.sow_days, "sow_day tolerance in days")->capture_default_str();
    sc_cmd->add_option("--wmax-tol", sc.tol.wmax_frac, "wmax_mm relative tolerance")->capture_default_str();
    sc_cmd->add_option("--growth-tol", sc.tol.growth_frac, "growth_rate relative tolerance")->capture_default_str();
    sc_cmd->add_option("--require", sc.require, "Exit 1 below this recovered fraction")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen_cmd) return gen_synthetic(gen);
        if (*as_cmd) return assimilate(as);
        if (*be_cmd) return bench(be);
        if (*in_cmd) {
            if (in.file.empty() && in.inbox.empty()) throw ValidationError("ingest needs --file or --inbox");
            if (in.watch) pthread_sigmask(SIG_BLOCK, &set, nullptr);
            return ingest(in);
        }
        if (*sv_cmd) {
            pthread_sigmask(SIG_BLOCK, &set, nullptr);
            return serve(sv);
        }
        if (*sc_cmd) return score(sc);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace agrimon::cli
