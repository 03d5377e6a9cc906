#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include "agrimon/assimilation.hpp"
#include "agrimon/bench.hpp"
#include "agrimon/distribution.hpp"
#include "agrimon/ingest.hpp"
#include "agrimon/json_io.hpp"
#include "agrimon/raster.hpp"
#include "agrimon/synthetic.hpp"

namespace py = pybind11;
using namespace agrimon;

namespace {

py::tuple parse_result(const ParseResult& r) {
    py::list records;
    for (const auto& o : r.records) {
        py::dict d;
        d["station_id"] = o.station_id;
        d["timestamp"] = o.timestamp;
        d["variable"] = o.variable;
        d["value"] = o.value;
        records.append(d);
    }
    py::dict report;
    report["inserted"] = r.report.inserted;
    report["duplicates"] = r.report.duplicates;
    report["rejected"] = r.report.rejected;
    py::list rejections;
    for (const auto& x : r.report.rejections) rejections.append(py::make_tuple(x.locator, x.reason));
    report["rejections"] = rejections;
    report["failure"] = r.report.failure ? py::cast(*r.report.failure) : py::none();
    return py::make_tuple(records, report);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Surrogate crop model, GA assimilation and master-worker runtime";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<JobFailure>(m, "JobFailure", PyExc_RuntimeError);

    py::class_<CropGenome>(m, "CropGenome")
        .def(py::init<>())
        .def_readwrite("sow_day", &CropGenome::sow_day)
        .def_readwrite("wmax_mm", &CropGenome::wmax_mm)
        .def_readwrite("s0_frac", &CropGenome::s0_frac)
        .def_readwrite("irr_threshold", &CropGenome::irr_threshold)
        .def_readwrite("irr_depth_mm", &CropGenome::irr_depth_mm)
        .def_readwrite("growth_rate", &CropGenome::growth_rate)
        .def_readwrite("lai_max", &CropGenome::lai_max)
        .def(py::self == py::self)
        .def("__repr__", [](const CropGenome& g) { return "CropGenome(" + nlohmann::json(g).dump() + ")"; });

    py::class_<WeatherSeries>(m, "WeatherSeries")
        .def(py::init([](const std::vector<double>& rain, const std::vector<double>& et0,
                         const std::vector<double>& tmean) { return WeatherSeries::from_columns(rain, et0, tmean); }),
             py::arg("rain_mm"), py::arg("et0_mm"), py::arg("tmean_c") = std::vector<double>{})
        .def("__len__", &WeatherSeries::season_len)
        .def_property_readonly("rain_mm", [](const WeatherSeries& w) {
            std::vector<double> v;
            for (const auto& r : w.records()) v.push_back(r.rain_mm);
            return v;
        })
        .def_property_readonly("et0_mm", [](const WeatherSeries& w) {
            std::vector<double> v;
            for (const auto& r : w.records()) v.push_back(r.et0_mm);
            return v;
        });

    py::class_<SimState>(m, "SimState")
        .def_readonly("day", &SimState::day)
        .def_readonly("soil_mm", &SimState::soil_mm)
        .def_readonly("lai", &SimState::lai)
        .def_readonly("et_actual_mm", &SimState::et_actual_mm)
        .def_readonly("irrigation_mm", &SimState::irrigation_mm)
        .def_readonly("drainage_mm", &SimState::drainage_mm);

    py::class_<GaConfig>(m, "GaConfig")
        .def(py::init<>())
        .def_readwrite("pop_size", &GaConfig::pop_size)
        .def_readwrite("generations", &GaConfig::generations)
        .def_readwrite("crossover_rate", &GaConfig::crossover_rate)
        .def_readwrite("mutation_rate", &GaConfig::mutation_rate)
        .def_readwrite("mutation_sd_frac", &GaConfig::mutation_sd_frac)
        .def_readwrite("tournament_size", &GaConfig::tournament_size)
        .def_readwrite("elitism", &GaConfig::elitism)
        .def_readwrite("seed", &GaConfig::seed)
        .def_readwrite("early_stop_rmse", &GaConfig::early_stop_rmse)
        .def_property(
            "free_genes",
            [](const GaConfig& c) {
                std::vector<std::string> names;
                for (Gene g : c.free_genes) names.emplace_back(gene_name(g));
                return names;
            },
            [](GaConfig& c, const std::vector<std::string>& names) {
                c.free_genes.clear();
                for (const auto& n : names) {
                    const auto g = gene_from_name(n);
                    if (!g) throw ValidationError("unknown gene '" + n + "'");
                    c.free_genes.push_back(*g);
                }
            });

    py::class_<PixelResult>(m, "PixelResult")
        .def_readonly("genome", &PixelResult::genome)
        .def_readonly("rmse", &PixelResult::rmse)
        .def_readonly("generations_run", &PixelResult::generations_run)
        .def_readonly("evaluations", &PixelResult::evaluations);

    m.def("simulate", &simulate, py::arg("genome"), py::arg("weather"));
    m.def(
        "observe",
        [](const std::vector<SimState>& states, int k, double noise_sd, std::uint64_t seed) {
            return observe(states, k, noise_sd, seed).values;
        },
        py::arg("states"), py::arg("revisit_days"), py::arg("noise_sd") = 0.0, py::arg("seed") = 0);
    m.def(
        "rmse", [](const std::vector<double>& a, const std::vector<double>& b) { return rmse(a, b); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "assimilate_pixel",
        [](const std::vector<double>& observed, int k, const WeatherSeries& weather, const GaConfig& config,
           const CropGenome& template_genome) {
            return assimilate_pixel(ObservableSeries{k, observed, 0.0}, weather, config,
                                    GenomeBounds::defaults(weather.season_len()), template_genome);
        },
        py::arg("observed"), py::arg("revisit_days"), py::arg("weather"), py::arg("config"), py::arg("template_genome"));

    m.def("synthetic_weather", &synthetic::weather, py::arg("days"), py::arg("seed"));
    m.def("template_genome", &synthetic::template_genome);

    m.def(
        "synthesize",
        [](std::uint32_t rows, std::uint32_t cols, std::size_t days, int revisit, double noise, std::uint64_t seed) {
            const auto w = synthetic::weather(days, seed);
            const auto field = synthetic::random_field(rows, cols, days, seed);
            const auto grid = synthesize_truth(field, w, revisit, noise, seed);
            const auto bytes = write_raster(grid);
            return py::make_tuple(py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                  nlohmann::json(field).dump());
        },
        py::arg("rows"), py::arg("cols"), py::arg("days"), py::arg("revisit_days"), py::arg("noise_sd"),
        py::arg("seed"),
        "Returns (AGR1 bytes, truth field JSON).");

    m.def(
        "read_raster",
        [](const py::bytes& data) {
            const std::string s = data;
            const auto grid = read_raster(std::as_bytes(std::span(s.data(), s.size())));
            py::dict d;
            d["rows"] = grid.rows();
            d["cols"] = grid.cols();
            d["bands"] = grid.bands();
            d["nodata"] = grid.nodata();
            d["values"] = std::vector<double>(grid.values().begin(), grid.values().end());
            return d;
        },
        py::arg("data"));
    m.def(
        "write_raster",
        [](std::uint32_t rows, std::uint32_t cols, std::uint32_t bands, double nodata, std::vector<double> values) {
            const auto bytes = write_raster(RasterGrid(rows, cols, bands, nodata, std::move(values)));
            return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("rows"), py::arg("cols"), py::arg("bands"), py::arg("nodata"), py::arg("values"));

    m.def(
        "run_synthetic_job",
        [](std::uint32_t rows, std::uint32_t cols, std::size_t days, int revisit, std::uint64_t seed,
           const std::string& strategy, std::size_t workers, const GaConfig& config, bool socket) {
            const auto kind = strategy_from_name(strategy);
            if (!kind) throw ValidationError("unknown strategy '" + strategy + "'");
            JobRequest request;
            request.weather = synthetic::weather(days, seed);
            request.grid = synthesize_truth(synthetic::random_field(rows, cols, days, seed), request.weather, revisit,
                                            0.0, seed);
            request.region = Region::full(rows, cols);
            request.config = config;
            request.bounds = GenomeBounds::defaults(days);
            request.template_genome = synthetic::template_genome();
            request.revisit_days = revisit;
            RunOptions options;
            options.transport = socket ? TransportKind::Socket : TransportKind::InProcess;
            JobOutput out;
            {
                py::gil_scoped_release release;
                out = run_job(request, Strategy{*kind, 1, 0}, workers, options);
            }
            return py::make_tuple(nlohmann::json(out.map).dump(), nlohmann::json(out.metrics).dump());
        },
        py::arg("rows"), py::arg("cols"), py::arg("days"), py::arg("revisit_days"), py::arg("seed"),
        py::arg("strategy"), py::arg("workers"), py::arg("config"), py::arg("socket") = false,
        "Runs a job on a synthetic raster; returns (ParamMap JSON, metrics JSON).");

    m.def(
        "predicted_messages",
        [](std::size_t pixels, const std::string& strategy, std::size_t workers, const GaConfig& config, int chunk,
           int groups) {
            const auto kind = strategy_from_name(strategy);
            if (!kind) throw ValidationError("unknown strategy '" + strategy + "'");
            std::vector<PixelCoord> coords;
            for (std::size_t i = 0; i < pixels; ++i) coords.push_back({0, static_cast<std::uint32_t>(i)});
            return plan_tasks(coords, Strategy{*kind, chunk, groups}, workers, config).predicted_messages;
        },
        py::arg("pixels"), py::arg("strategy"), py::arg("workers"), py::arg("config"), py::arg("chunk") = 1,
        py::arg("groups") = 0);

    m.def(
        "parse_weather_csv", [](const std::string& text) { return parse_result(parse_weather_csv(text)); },
        py::arg("text"));
    m.def(
        "parse_sensor_xml", [](const std::string& text) { return parse_result(parse_sensor_xml(text)); },
        py::arg("text"));
}
