#include "agrimon/distribution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace agrimon {

using wire::Frame;
using wire::FrameKind;

std::string_view strategy_name(StrategyKind kind) noexcept {
    switch (kind) {
        case StrategyKind::Pixel: return "PIXEL";
        case StrategyKind::Population: return "POPULATION";
        case StrategyKind::Hierarchical: return "HIERARCHICAL";
    }
    return "?";
}

std::optional<StrategyKind> strategy_from_name(std::string_view name) noexcept {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto k : {StrategyKind::Pixel, StrategyKind::Population, StrategyKind::Hierarchical}) {
        if (strategy_name(k) == upper) return k;
    }
    return std::nullopt;
}

int Strategy::effective_groups(std::size_t n_workers) const {
    if (groups > 0) return groups;
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_workers)))));
}

void Strategy::validate(std::size_t n_workers) const {
    if (n_workers < 1) throw ValidationError("n_workers must be >= 1");
    if (chunk < 1) throw ValidationError("chunk size must be >= 1");
    if (groups < 0) throw ValidationError("group count must be >= 0");
    if (kind == StrategyKind::Hierarchical && static_cast<std::size_t>(effective_groups(n_workers)) > n_workers) {
        throw ValidationError("hierarchical strategy needs at least one worker per group");
    }
}

void StrategyMetrics::accumulate(const StrategyMetrics& other) {
    pixels += other.pixels;
    messages += other.messages;
    bytes += other.bytes;
    tasks += other.tasks;
    retries += other.retries;
    predicted_messages += other.predicted_messages;
    setup_messages += other.setup_messages;
    setup_bytes += other.setup_bytes;
    wall_ms += other.wall_ms;
    if (busy_ms.size() < other.busy_ms.size()) busy_ms.resize(other.busy_ms.size(), 0.0);
    for (std::size_t i = 0; i < other.busy_ms.size(); ++i) busy_ms[i] += other.busy_ms[i];
}

const PixelEntry* ParamMap::find(PixelCoord coord) const noexcept {
    auto it = std::lower_bound(entries.begin(), entries.end(), coord,
                               [](const PixelEntry& e, PixelCoord c) { return e.coord < c; });
    return (it != entries.end() && it->coord == coord) ? &*it : nullptr;
}

std::vector<std::size_t> split_population(std::size_t pop_size, std::size_t batches) {
    std::vector<std::size_t> sizes(batches, pop_size / batches);
    for (std::size_t i = 0; i < pop_size % batches; ++i) ++sizes[i];
    return sizes;
}

namespace {

std::vector<std::vector<std::size_t>> partition_workers(std::size_t n_workers, std::size_t groups) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t next = 0;
    for (std::size_t size : split_population(n_workers, groups)) {
        std::vector<std::size_t> members(size);
        for (auto& m : members) m = next++;
        out.push_back(std::move(members));
    }
    return out;
}

}  // namespace

TaskPlan plan_tasks(const std::vector<PixelCoord>& pixels, const Strategy& strategy, std::size_t n_workers,
                    const GaConfig& config) {
    strategy.validate(n_workers);
    if (pixels.empty()) throw ValidationError("job region holds no pixels to process");
    if (config.pop_size < 2 || config.generations < 0) throw ValidationError("invalid GA population schedule");

    TaskPlan plan;
    plan.strategy = strategy;
    plan.n_workers = n_workers;
    plan.pixel_count = pixels.size();
    plan.generations = config.generations;
    const auto pop = static_cast<std::size_t>(config.pop_size);
    const auto rounds = static_cast<std::int64_t>(config.generations) + 1;
    const auto P = static_cast<std::int64_t>(pixels.size());

    switch (strategy.kind) {
        case StrategyKind::Pixel: {
            const auto c = static_cast<std::size_t>(strategy.chunk);
            for (std::size_t i = 0; i < pixels.size(); i += c) {
                const auto end = std::min(pixels.size(), i + c);
                plan.top_level.push_back({TaskKind::PixelBatch, {pixels.begin() + i, pixels.begin() + end}, -1});
            }
            plan.predicted_tasks = static_cast<std::int64_t>(plan.top_level.size());
            break;
        }
        case StrategyKind::Population: {
            plan.groups = partition_workers(n_workers, 1);
            plan.batches_per_generation = {std::min(n_workers, pop)};
            plan.predicted_tasks = P * rounds * static_cast<std::int64_t>(plan.batches_per_generation[0]);
            break;
        }
        case StrategyKind::Hierarchical: {
            const auto g = static_cast<std::size_t>(strategy.effective_groups(n_workers));
            plan.groups = partition_workers(n_workers, g);
            for (const auto& members : plan.groups) plan.batches_per_generation.push_back(std::min(members.size(), pop));
            std::int64_t tasks = 0;
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                const auto group = i % g;
                plan.top_level.push_back({TaskKind::PixelHandoff, {pixels[i]}, static_cast<int>(group)});
                tasks += 1 + rounds * static_cast<std::int64_t>(plan.batches_per_generation[group]);
            }
            plan.predicted_tasks = tasks;
            break;
        }
    }
    plan.predicted_messages = 2 * plan.predicted_tasks;
    return plan;
}

TaskPlan plan_tasks(const Region& region, const Strategy& strategy, std::size_t n_workers, const GaConfig& config) {
    if (region.row0 > region.row1 || region.col0 > region.col1) throw ValidationError("region is empty");
    std::vector<PixelCoord> pixels;
    for (auto r = region.row0; r <= region.row1; ++r) {
        for (auto c = region.col0; c <= region.col1; ++c) pixels.push_back({r, c});
    }
    return plan_tasks(pixels, strategy, n_workers, config);
}

std::vector<PixelCoord> job_pixels(const RasterGrid& grid, const Region& region) {
    region.require_within(grid.rows(), grid.cols());
    std::vector<PixelCoord> pixels;
    for (auto r = region.row0; r <= region.row1; ++r) {
        for (auto c = region.col0; c <= region.col1; ++c) {
            if (!grid.is_nodata_pixel(r, c)) pixels.push_back({r, c});
        }
    }
    return pixels;
}

int infer_revisit_days(std::size_t season_len, std::size_t bands) {
    for (std::size_t k = 1; k <= std::max<std::size_t>(season_len, 1); ++k) {
        if ((season_len + k - 1) / k == bands) return static_cast<int>(k);
    }
    throw ValidationError("no revisit interval maps a " + std::to_string(season_len) + "-day season onto " +
                          std::to_string(bands) + " bands");
}

namespace {

std::string pixel_label(PixelCoord p) {
    std::ostringstream s;
    s << "(" << p.row << ", " << p.col << ")";
    return s.str();
}

GaConfig pixel_config(const GaConfig& base, PixelCoord p) {
    GaConfig c = base;
    c.seed = mix_seed(base.seed, p.row, p.col);
    return c;
}

ObservableSeries observed_at(const JobRequest& request, PixelCoord p) {
    return {request.revisit_days, request.grid.pixel_series(p.row, p.col), 0.0};
}

// Runs a set of tasks over a fixed group of workers: one task in flight per
// worker, failed tasks retried once on a different worker, replies handed back
// by task index.
class Dispatcher {
public:
    struct Task {
        Frame frame;
        PixelCoord pixel;
    };
    using ReplyHandler = std::function<void(std::size_t task, const Frame& reply)>;

    Dispatcher(std::vector<WorkerLink*> links, std::vector<std::size_t> worker_ids, Mailbox& mailbox,
               StrategyMetrics& metrics)
        : links_(std::move(links)), ids_(std::move(worker_ids)), alive_(links_.size(), true), mailbox_(mailbox),
          metrics_(metrics) {
        for (std::size_t i = 0; i < ids_.size(); ++i) position_[ids_[i]] = i;
    }

    void run(std::vector<Task>& tasks, const ReplyHandler& on_reply) {
        std::deque<std::size_t> pending;
        for (std::size_t i = 0; i < tasks.size(); ++i) pending.push_back(i);
        std::vector<int> attempts(tasks.size(), 0);
        std::vector<std::optional<std::size_t>> excluded(tasks.size());
        std::vector<std::optional<std::size_t>> in_flight(links_.size());
        std::deque<std::size_t> idle;
        for (std::size_t w = 0; w < links_.size(); ++w) {
            if (alive_[w]) idle.push_back(w);
        }
        std::size_t completed = 0;

        auto fail = [&](std::size_t task, std::size_t worker, const std::string& why) {
            if (++attempts[task] >= 2) {
                throw JobFailure("task for pixel " + pixel_label(tasks[task].pixel) + " failed twice: " + why,
                                 tasks[task].pixel);
            }
            ++metrics_.retries;
            excluded[task] = worker;
            pending.push_front(task);
        };

        while (completed < tasks.size()) {
            for (std::size_t n = idle.size(); n > 0 && !pending.empty(); --n) {
                const std::size_t w = idle.front();
                idle.pop_front();
                auto it = std::find_if(pending.begin(), pending.end(),
                                       [&](std::size_t t) { return excluded[t] != w; });
                if (it == pending.end()) {
                    idle.push_back(w);
                    continue;
                }
                const std::size_t t = *it;
                pending.erase(it);
                tasks[t].frame.task_id = next_task_id_++;
                if (!links_[w]->send(tasks[t].frame)) {
                    alive_[w] = false;
                    fail(t, w, "worker " + std::to_string(ids_[w]) + " unreachable");
                    continue;
                }
                in_flight[w] = t;
            }
            if (std::none_of(in_flight.begin(), in_flight.end(), [](const auto& f) { return f.has_value(); })) {
                const auto& stuck = tasks[pending.front()].pixel;
                throw JobFailure("no live worker can take the task for pixel " + pixel_label(stuck), stuck);
            }

            auto envelope = mailbox_.pop();
            if (!envelope) throw std::logic_error("dispatcher mailbox closed");
            const auto pos = position_.find(envelope->worker);
            if (pos == position_.end() || !in_flight[pos->second]) continue;
            const std::size_t w = pos->second;
            const std::size_t t = *in_flight[w];
            if (!envelope->lost && envelope->frame.task_id != tasks[t].frame.task_id) continue;
            in_flight[w].reset();

            if (envelope->lost) {
                alive_[w] = false;
                fail(t, w, "worker " + std::to_string(ids_[w]) + " died");
                continue;
            }
            if (envelope->frame.kind == FrameKind::Failure) {
                idle.push_back(w);
                fail(t, w, wire::decode_failure(envelope->frame.payload));
                continue;
            }
            metrics_.messages += 2;
            metrics_.tasks += 1;
            metrics_.bytes += static_cast<std::int64_t>(tasks[t].frame.payload.size() + envelope->frame.payload.size());
            metrics_.busy_ms[ids_[w]] += envelope->frame.busy_ms;
            ++completed;
            idle.push_back(w);
            on_reply(t, envelope->frame);
        }
    }

private:
    std::vector<WorkerLink*> links_;
    std::vector<std::size_t> ids_;
    std::vector<bool> alive_;
    std::unordered_map<std::size_t, std::size_t> position_;
    Mailbox& mailbox_;
    StrategyMetrics& metrics_;
    std::uint64_t next_task_id_ = 1;
};

// Runs the GA for one pixel locally, farming each generation's fitness
// evaluations out to a worker group.
PixelResult assimilate_distributed(const JobRequest& request, PixelCoord pixel, Dispatcher& dispatcher,
                                   std::size_t batches) {
    const auto observed = observed_at(request, pixel);
    const auto config = pixel_config(request.config, pixel);
    BatchEvaluator evaluate = [&](std::span<const CropGenome> population) {
        std::vector<Dispatcher::Task> tasks;
        std::size_t first = 0;
        for (std::size_t size : split_population(population.size(), batches)) {
            wire::FitnessTask task{pixel, static_cast<std::uint32_t>(first),
                                   {population.begin() + first, population.begin() + first + size},
                                   observed.values};
            tasks.push_back({Frame{FrameKind::FitnessTask, 0, 0.0, wire::encode(task)}, pixel});
            first += size;
        }
        std::vector<double> scores(population.size(), -1.0);
        dispatcher.run(tasks, [&](std::size_t, const Frame& reply) {
            const auto r = wire::decode_fitness_reply(reply.payload);
            if (r.first_index + r.rmse.size() > scores.size()) throw wire::DecodeError("fitness reply out of range");
            std::copy(r.rmse.begin(), r.rmse.end(), scores.begin() + r.first_index);
        });
        return scores;
    };
    return assimilate_pixel(observed, request.weather, config, request.bounds, request.template_genome, evaluate);
}

wire::PixelTask pixel_task(const JobRequest& request, std::span<const PixelCoord> pixels) {
    wire::PixelTask task;
    for (const auto& p : pixels) task.pixels.push_back({p, request.grid.pixel_series(p.row, p.col)});
    return task;
}

// Owns a group's evaluation loop. Receives pixel hand-offs from the master and
// answers with the finished PixelResult.
class GroupLeader {
public:
    GroupLeader(const JobRequest& request, int group, std::vector<WorkerLink*> links, std::vector<std::size_t> ids,
                std::size_t batches, std::size_t n_workers, Mailbox& from_workers, Mailbox& to_master)
        : request_(request), group_(group), batches_(batches), master_(to_master) {
        metrics_.busy_ms.assign(n_workers, 0.0);
        dispatcher_.emplace(std::move(links), std::move(ids), from_workers, metrics_);
    }

    void start() {
        thread_ = std::thread([this] { loop(); });
    }
    void hand_off(Frame frame) { inbox_.push(std::move(frame)); }
    void stop() {
        inbox_.push(Frame{FrameKind::Shutdown, 0, 0.0, {}});
        if (thread_.joinable()) thread_.join();
    }
    const StrategyMetrics& metrics() const noexcept { return metrics_; }

private:
    void loop() {
        while (auto frame = inbox_.pop()) {
            if (frame->kind == FrameKind::Shutdown) return;
            Frame reply{FrameKind::PixelReply, frame->task_id, 0.0, {}};
            try {
                const auto task = wire::decode_pixel_task(frame->payload);
                wire::PixelReply out;
                for (const auto& p : task.pixels) {
                    out.outcomes.push_back({p.coord, assimilate_distributed(request_, p.coord, *dispatcher_, batches_)});
                }
                reply.payload = wire::encode(out);
            } catch (const std::exception& e) {
                reply.kind = FrameKind::Failure;
                reply.payload = wire::encode_failure(e.what());
            }
            master_.push(Envelope{static_cast<std::size_t>(group_), std::move(reply), false});
        }
    }

    const JobRequest& request_;
    int group_;
    std::size_t batches_;
    Mailbox& master_;
    Channel<Frame> inbox_;
    StrategyMetrics metrics_;
    std::optional<Dispatcher> dispatcher_;
    std::thread thread_;
};

void validate_request(const JobRequest& request) {
    request.region.require_within(request.grid.rows(), request.grid.cols());
    if (request.weather.empty()) throw ValidationError("weather series is empty");
    validate_search(request.config, request.bounds, request.template_genome, request.weather.season_len());
    const auto expected = sample_count(request.weather.season_len(), request.revisit_days);
    if (expected != request.grid.bands()) {
        throw ValidationError("raster has " + std::to_string(request.grid.bands()) + " bands but the season yields " +
                              std::to_string(expected) + " samples at revisit " + std::to_string(request.revisit_days));
    }
}

}  // namespace

JobOutput run_job(const JobRequest& request, const Strategy& strategy, std::size_t n_workers,
                  const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    validate_request(request);
    const auto pixels = job_pixels(request.grid, request.region);
    const auto plan = plan_tasks(pixels, strategy, n_workers, request.config);

    StrategyMetrics metrics;
    metrics.strategy = strategy.kind;
    metrics.workers = n_workers;
    metrics.pixels = pixels.size();
    metrics.generations = request.config.generations;
    metrics.predicted_messages = plan.predicted_messages;
    metrics.busy_ms.assign(n_workers, 0.0);

    std::vector<std::optional<PixelResult>> results(pixels.size());
    std::map<PixelCoord, std::size_t> index_of;
    for (std::size_t i = 0; i < pixels.size(); ++i) index_of[pixels[i]] = i;
    std::size_t done = 0;
    auto record = [&](const wire::PixelOutcome& o) {
        auto it = index_of.find(o.coord);
        if (it == index_of.end() || results[it->second]) throw wire::DecodeError("reply for unexpected pixel");
        results[it->second] = o.result;
        ++done;
        if (options.on_progress) options.on_progress(done, pixels.size());
    };

    // Mailboxes outlive the worker links that push into them; in hierarchical
    // mode each group's workers reply to that group's leader.
    Mailbox master_mailbox;
    std::vector<std::unique_ptr<Mailbox>> group_mailboxes;
    std::vector<WorkerSpec> specs(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        specs[w].index = w;
        specs[w].mailbox = &master_mailbox;
        if (auto it = options.crash_after.find(w); it != options.crash_after.end()) specs[w].crash_after = it->second;
    }
    if (strategy.kind == StrategyKind::Hierarchical) {
        for (const auto& members : plan.groups) {
            group_mailboxes.push_back(std::make_unique<Mailbox>());
            for (std::size_t w : members) specs[w].mailbox = group_mailboxes.back().get();
        }
    }

    auto transport = make_transport(options.transport);
    std::vector<std::unique_ptr<WorkerLink>> links = transport->start(specs);
    std::vector<std::unique_ptr<GroupLeader>> leaders;
    auto shutdown = [&] {
        for (auto& leader : leaders) leader->stop();
        for (auto& link : links) link->close();
    };
    auto group_links = [&](const std::vector<std::size_t>& members) {
        std::vector<WorkerLink*> out;
        for (std::size_t w : members) out.push_back(links[w].get());
        return out;
    };

    try {
        const auto context = wire::encode(wire::JobContext{request.weather, request.config, request.bounds,
                                                           request.template_genome, request.revisit_days});
        for (auto& link : links) {
            link->send(Frame{FrameKind::Context, 0, 0.0, context});
            metrics.setup_messages += 1;
            metrics.setup_bytes += static_cast<std::int64_t>(context.size());
        }

        switch (strategy.kind) {
            case StrategyKind::Pixel: {
                std::vector<std::size_t> all(n_workers);
                for (std::size_t w = 0; w < n_workers; ++w) all[w] = w;
                Dispatcher dispatcher(group_links(all), all, master_mailbox, metrics);
                std::vector<Dispatcher::Task> tasks;
                for (const auto& planned : plan.top_level) {
                    tasks.push_back({Frame{FrameKind::PixelTask, 0, 0.0,
                                           wire::encode(pixel_task(request, planned.pixels))},
                                     planned.pixels.front()});
                }
                dispatcher.run(tasks, [&](std::size_t, const Frame& reply) {
                    for (const auto& o : wire::decode_pixel_reply(reply.payload).outcomes) record(o);
                });
                break;
            }
            case StrategyKind::Population: {
                const auto& members = plan.groups[0];
                Dispatcher dispatcher(group_links(members), members, master_mailbox, metrics);
                for (const auto& p : pixels) {
                    record({p, assimilate_distributed(request, p, dispatcher, plan.batches_per_generation[0])});
                }
                break;
            }
            case StrategyKind::Hierarchical: {
                const auto n_groups = plan.groups.size();
                for (std::size_t g = 0; g < n_groups; ++g) {
                    leaders.push_back(std::make_unique<GroupLeader>(
                        request, static_cast<int>(g), group_links(plan.groups[g]), plan.groups[g],
                        plan.batches_per_generation[g], n_workers, *group_mailboxes[g], master_mailbox));
                }
                // Pixels were dealt round-robin at plan time; each leader gets its
                // next pixel as soon as it answers the previous one.
                std::vector<std::deque<std::size_t>> queued(n_groups);
                for (std::size_t i = 0; i < plan.top_level.size(); ++i) {
                    queued[static_cast<std::size_t>(plan.top_level[i].group)].push_back(i);
                }
                std::vector<std::optional<std::size_t>> in_flight(n_groups);
                std::vector<std::size_t> sent_bytes(plan.top_level.size(), 0);
                auto send_next = [&](std::size_t g) {
                    if (queued[g].empty()) return;
                    const auto i = queued[g].front();
                    queued[g].pop_front();
                    auto payload = wire::encode(pixel_task(request, plan.top_level[i].pixels));
                    sent_bytes[i] = payload.size();
                    in_flight[g] = i;
                    leaders[g]->hand_off(Frame{FrameKind::PixelTask, i, 0.0, std::move(payload)});
                };
                for (std::size_t g = 0; g < n_groups; ++g) {
                    leaders[g]->start();
                    send_next(g);
                }
                for (std::size_t finished = 0; finished < plan.top_level.size(); ++finished) {
                    auto envelope = master_mailbox.pop();
                    if (!envelope) throw std::logic_error("master mailbox closed");
                    const auto g = envelope->worker;
                    const auto i = in_flight.at(g).value();
                    in_flight[g].reset();
                    if (envelope->frame.kind == FrameKind::Failure) {
                        throw JobFailure(wire::decode_failure(envelope->frame.payload),
                                         plan.top_level[i].pixels.front());
                    }
                    metrics.messages += 2;
                    metrics.tasks += 1;
                    metrics.bytes += static_cast<std::int64_t>(sent_bytes[i] + envelope->frame.payload.size());
                    for (const auto& o : wire::decode_pixel_reply(envelope->frame.payload).outcomes) record(o);
                    send_next(g);
                }
                break;
            }
        }
    } catch (...) {
        shutdown();
        throw;
    }
    shutdown();
    for (const auto& leader : leaders) {
        StrategyMetrics group = leader->metrics();
        group.pixels = 0;
        metrics.accumulate(group);
    }

    ParamMap map{request.region, request.config.seed, {}};
    for (std::size_t i = 0; i < pixels.size(); ++i) map.entries.push_back({pixels[i], *results[i]});
    metrics.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return {std::move(map), std::move(metrics)};
}

ParamMap run_sequential(const JobRequest& request) {
    validate_request(request);
    ParamMap map{request.region, request.config.seed, {}};
    for (const auto& p : job_pixels(request.grid, request.region)) {
        map.entries.push_back({p, assimilate_pixel(observed_at(request, p), request.weather,
                                                   pixel_config(request.config, p), request.bounds,
                                                   request.template_genome)});
    }
    if (map.entries.empty()) throw ValidationError("job region holds no pixels to process");
    return map;
}

}  // namespace agrimon
