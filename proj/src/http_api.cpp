#include "agrimon/http_api.hpp"

#include <cmath>

#include "httplib.h"

#include "agrimon/json_io.hpp"

namespace agrimon {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}, {"status", status}});
}

// Maps library exceptions onto status codes.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        } catch (const Conflict& e) {
            send_error(res, 409, e.what());
        } catch (const CoverageGap& e) {
            json missing = json::array();
            for (const auto& [date, var] : e.missing()) missing.push_back({{"date", date}, {"variable", var}});
            send_json(res, 422, json{{"error", e.what()}, {"status", 422}, {"missing", missing}});
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, std::string("malformed JSON: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json result_body(const std::string& id, const ParamMap& map) {
    const auto rows = map.region.rows();
    const auto cols = map.region.cols();
    json grids = json::object();
    auto grid_of = [&](auto value_of) {
        json g = json::array();
        for (std::uint32_t r = 0; r < rows; ++r) {
            json line = json::array();
            for (std::uint32_t c = 0; c < cols; ++c) {
                const auto* e = map.find({map.region.row0 + r, map.region.col0 + c});
                line.push_back(e ? nullable(value_of(e->result)) : json(nullptr));
            }
            g.push_back(std::move(line));
        }
        return g;
    };
    for (Gene gene : kAllGenes) {
        grids[std::string(gene_name(gene))] = grid_of([gene](const PixelResult& p) { return p.genome.get(gene); });
    }
    grids["rmse"] = grid_of([](const PixelResult& p) { return p.rmse; });
    return json{{"id", id}, {"region", map.region}, {"seed", map.seed}, {"rows", rows},
                {"cols", cols}, {"grids", grids},     {"pixels", map.entries}};
}

RasterGrid parameter_raster(const ParamMap& map, const std::string& param) {
    const auto gene = gene_from_name(param);
    if (!gene && param != "rmse") throw ValidationError("unknown parameter '" + param + "'");
    RasterGrid grid(map.region.rows(), map.region.cols(), 1);
    for (std::uint32_t r = 0; r < grid.rows(); ++r) {
        for (std::uint32_t c = 0; c < grid.cols(); ++c) {
            const auto* e = map.find({map.region.row0 + r, map.region.col0 + c});
            grid.set(0, r, c, !e ? grid.nodata() : gene ? e->result.genome.get(*gene) : e->result.rmse);
        }
    }
    return grid;
}

std::string required_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name) || req.get_param_value(name).empty()) {
        throw ValidationError(std::string("query parameter '") + name + "' is required");
    }
    return req.get_param_value(name);
}

}  // namespace

HttpApi::HttpApi(Portal& portal) : portal_(portal), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
              send_json(res, 200, json{{"status", "ok"}});
          }));

    s.Post("/api/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const auto spec = json::parse(req.body).get<JobSpec>();
               const auto id = portal_.submit(spec);
               const auto record = portal_.status(id);
               send_json(res, 201, json{{"id", id}, {"state", job_state_name(record.state)}});
           }));

    s.Get("/api/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
              send_json(res, 200, json(portal_.jobs()));
          }));

    s.Get(R"(/api/jobs/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, json(portal_.status(req.matches[1])));
          }));

    s.Get(R"(/api/jobs/([A-Za-z0-9_-]+)/result)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
              const std::string id = req.matches[1];
              const auto map = portal_.result(id);
              const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
              if (format == "agr1") {
                  const auto bytes = write_raster(parameter_raster(map, required_param(req, "param")));
                  res.status = 200;
                  res.set_content(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                  "application/octet-stream");
                  return;
              }
              if (format != "json") throw ValidationError("format must be json or agr1");
              send_json(res, 200, result_body(id, map));
          }));

    s.Get("/api/rasters", guarded([this](const httplib::Request&, httplib::Response& res) {
              send_json(res, 200, json(portal_.rasters()));
          }));

    s.Get(R"(/api/rasters/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, json(portal_.raster(req.matches[1])));
          }));

    s.Get(R"(/api/rasters/([A-Za-z0-9_-]+)/band/(\d+))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
              const std::string id = req.matches[1];
              const auto grid = portal_.raster_grid(id);
              const std::string band_text = req.matches[2];
              if (band_text.size() > 9 || std::stoul(band_text) >= grid.bands()) {
                  throw NotFound("raster '" + id + "' has no band " + band_text);
              }
              const auto band = static_cast<std::uint32_t>(std::stoul(band_text));
              json values = json::array();
              for (std::uint32_t r = 0; r < grid.rows(); ++r) {
                  json line = json::array();
                  for (std::uint32_t c = 0; c < grid.cols(); ++c) {
                      const double v = grid.at(band, r, c);
                      line.push_back(grid.is_nodata(v) ? json(nullptr) : json(v));
                  }
                  values.push_back(std::move(line));
              }
              send_json(res, 200,
                        json{{"raster_id", id},
                             {"band", band},
                             {"rows", grid.rows()},
                             {"cols", grid.cols()},
                             {"nodata", nullable(grid.nodata())},
                             {"values", values}});
          }));

    s.Get("/api/weather", guarded([this](const httplib::Request& req, httplib::Response& res) {
              const auto station = required_param(req, "station");
              const auto from = parse_date(required_param(req, "from"));
              const auto to = parse_date(required_param(req, "to"));
              if (!from || !to) throw ValidationError("from and to must be YYYY-MM-DD dates");
              if (*to < *from) throw ValidationError("to precedes from");
              if ((*to - *from).count() > 3660) throw ValidationError("range longer than ten years");
              const auto query = portal_.store().query_weather(station, 0, static_cast<int>((*to - *from).count()), *from);
              json records = json::array();
              for (const auto& r : query.series.records()) {
                  records.push_back({{"date", format_date(*from + std::chrono::days(r.day))},
                                     {"day", r.day},
                                     {"rain_mm", r.rain_mm},
                                     {"et0_mm", r.et0_mm},
                                     {"tmean_c", r.tmean_c}});
              }
              send_json(res, 200,
                        json{{"station", station},
                             {"from", format_date(*from)},
                             {"to", format_date(*to)},
                             {"records", records},
                             {"tmean_defaulted_days", query.tmean_defaulted_days},
                             {"warning", query.warning()}});
          }));

    s.Get("/api/metadata", guarded([this](const httplib::Request& req, httplib::Response& res) {
              json hits = json::array();
              for (const auto& e : portal_.metadata().search_metadata(required_param(req, "keyword"))) {
                  hits.push_back({{"title", e.title},
                                  {"description", e.description},
                                  {"keywords", e.keywords},
                                  {"source_uri", e.source_uri},
                                  {"ingested_at", e.ingested_at}});
              }
              send_json(res, 200, hits);
          }));

    s.Get("/api/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
              json strategies = json::object();
              for (const auto& [kind, m] : portal_.strategy_metrics()) strategies[std::string(strategy_name(kind))] = m;
              json states = json::object();
              for (auto st : {JobState::Queued, JobState::Running, JobState::Done, JobState::Failed}) {
                  states[std::string(job_state_name(st))] = 0;
              }
              for (const auto& r : portal_.jobs()) {
                  states[std::string(job_state_name(r.state))] = states[std::string(job_state_name(r.state))].get<int>() + 1;
              }
              send_json(res, 200,
                        json{{"strategies", strategies},
                             {"queue_depth", portal_.queue_depth()},
                             {"running", portal_.running()},
                             {"jobs", states}});
          }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw std::runtime_error("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpApi::listen() { server_->listen_after_bind(); }

void HttpApi::start() {
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void HttpApi::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace agrimon
