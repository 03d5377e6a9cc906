#include "agrimon/transport.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <system_error>
#include <thread>

#include "agrimon/assimilation.hpp"

namespace agrimon {

using wire::Frame;
using wire::FrameKind;

namespace {

Frame failure_frame(std::uint64_t task_id, const std::string& message) {
    return Frame{FrameKind::Failure, task_id, 0.0, wire::encode_failure(message)};
}

bool is_task(FrameKind kind) { return kind == FrameKind::PixelTask || kind == FrameKind::FitnessTask; }

}  // namespace

std::optional<Frame> WorkerSession::handle(const Frame& request) {
    const auto started = std::chrono::steady_clock::now();
    Frame reply;
    reply.task_id = request.task_id;
    try {
        switch (request.kind) {
            case FrameKind::Context:
                context_ = wire::decode_context(request.payload);
                return std::nullopt;
            case FrameKind::Shutdown:
                return std::nullopt;
            case FrameKind::PixelTask: {
                if (!context_) return failure_frame(request.task_id, "task before job context");
                const auto task = wire::decode_pixel_task(request.payload);
                wire::PixelReply out;
                for (const auto& p : task.pixels) {
                    ObservableSeries observed{context_->revisit_days, p.observed, 0.0};
                    GaConfig config = context_->config;
                    config.seed = mix_seed(context_->config.seed, p.coord.row, p.coord.col);
                    out.outcomes.push_back({p.coord, assimilate_pixel(observed, context_->weather, config,
                                                                      context_->bounds, context_->template_genome)});
                }
                reply.kind = FrameKind::PixelReply;
                reply.payload = wire::encode(out);
                break;
            }
            case FrameKind::FitnessTask: {
                if (!context_) return failure_frame(request.task_id, "task before job context");
                const auto task = wire::decode_fitness_task(request.payload);
                ObservableSeries observed{context_->revisit_days, task.observed, 0.0};
                wire::FitnessReply out{task.first_index, {}};
                out.rmse.reserve(task.genomes.size());
                for (const auto& g : task.genomes) out.rmse.push_back(fitness(g, observed, context_->weather));
                reply.kind = FrameKind::FitnessReply;
                reply.payload = wire::encode(out);
                break;
            }
            default:
                return failure_frame(request.task_id, "unexpected frame kind");
        }
    } catch (const std::exception& e) {
        return failure_frame(request.task_id, e.what());
    }
    reply.busy_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return reply;
}

// ---------------------------------------------------------------------------
// In-process transport

namespace {

class ThreadLink final : public WorkerLink {
public:
    explicit ThreadLink(const WorkerSpec& spec) : spec_(spec), thread_([this] { run(); }) {}

    ~ThreadLink() override { close(); }

    bool send(const Frame& frame) override {
        if (dead_.load()) return false;
        inbox_.push(frame);
        return true;
    }

    void close() override {
        if (!thread_.joinable()) return;
        inbox_.push(Frame{FrameKind::Shutdown, 0, 0.0, {}});
        inbox_.close();
        thread_.join();
    }

private:
    void run() {
        WorkerSession session;
        int tasks_seen = 0;
        while (auto frame = inbox_.pop()) {
            if (frame->kind == FrameKind::Shutdown) return;
            if (is_task(frame->kind) && spec_.crash_after && tasks_seen++ >= *spec_.crash_after) {
                dead_.store(true);
                spec_.mailbox->push(Envelope{spec_.index, {}, true});
                return;
            }
            if (auto reply = session.handle(*frame)) spec_.mailbox->push(Envelope{spec_.index, std::move(*reply), false});
        }
    }

    WorkerSpec spec_;
    Channel<Frame> inbox_;
    std::atomic<bool> dead_{false};
    std::thread thread_;
};

class InProcessTransport final : public Transport {
public:
    std::vector<std::unique_ptr<WorkerLink>> start(std::span<const WorkerSpec> workers) override {
        std::vector<std::unique_ptr<WorkerLink>> links;
        for (const auto& spec : workers) links.push_back(std::make_unique<ThreadLink>(spec));
        return links;
    }
    std::string_view name() const noexcept override { return "in-process"; }
};

// ---------------------------------------------------------------------------
// Socket transport

bool write_all(int fd, std::span<const std::byte> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        done += static_cast<std::size_t>(n);
    }
    return true;
}

bool read_exact(int fd, std::span<std::byte> out) {
    std::size_t done = 0;
    while (done < out.size()) {
        const auto n = ::recv(fd, out.data() + done, out.size() - done, 0);
        if (n == 0) return false;
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        done += static_cast<std::size_t>(n);
    }
    return true;
}

std::optional<Frame> read_frame(int fd) {
    std::array<std::byte, wire::kFrameHeaderBytes> header{};
    if (!read_exact(fd, header)) return std::nullopt;
    Frame frame;
    std::uint32_t len = 0;
    try {
        len = wire::decode_frame_header(header, frame);
    } catch (const wire::DecodeError&) {
        return std::nullopt;
    }
    frame.payload.resize(len);
    if (!read_exact(fd, frame.payload)) return std::nullopt;
    return frame;
}

[[noreturn]] void worker_process_main(int fd, std::optional<int> crash_after) {
    WorkerSession session;
    int tasks_seen = 0;
    while (auto frame = read_frame(fd)) {
        if (frame->kind == FrameKind::Shutdown) break;
        if (is_task(frame->kind) && crash_after && tasks_seen++ >= *crash_after) ::_exit(3);
        if (auto reply = session.handle(*frame)) {
            if (!write_all(fd, wire::encode_frame(*reply))) ::_exit(4);
        }
    }
    ::_exit(0);
}

class ProcessLink final : public WorkerLink {
public:
    ProcessLink(const WorkerSpec& spec, int fd, pid_t pid) : spec_(spec), fd_(fd), pid_(pid) {}

    ~ProcessLink() override { close(); }

    void start_reader() {
        reader_ = std::thread([this] {
            while (auto frame = read_frame(fd_)) spec_.mailbox->push(Envelope{spec_.index, std::move(*frame), false});
            dead_.store(true);
            if (!closing_.load()) spec_.mailbox->push(Envelope{spec_.index, {}, true});
        });
    }

    bool send(const Frame& frame) override {
        if (dead_.load()) return false;
        if (!write_all(fd_, wire::encode_frame(frame))) {
            dead_.store(true);
            return false;
        }
        return true;
    }

    void close() override {
        if (fd_ < 0) return;
        closing_.store(true);
        if (!dead_.load()) write_all(fd_, wire::encode_frame(Frame{FrameKind::Shutdown, 0, 0.0, {}}));
        ::shutdown(fd_, SHUT_WR);
        int status = 0;
        while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
        }
        if (reader_.joinable()) reader_.join();
        ::close(fd_);
        fd_ = -1;
    }

private:
    WorkerSpec spec_;
    int fd_;
    pid_t pid_;
    std::atomic<bool> dead_{false};
    std::atomic<bool> closing_{false};
    std::thread reader_;
};

class SocketTransport final : public Transport {
public:
    std::vector<std::unique_ptr<WorkerLink>> start(std::span<const WorkerSpec> workers) override {
        // Fork every worker before any reader thread exists.
        std::vector<std::unique_ptr<ProcessLink>> links;
        std::vector<int> parent_fds;
        for (const auto& spec : workers) {
            int fds[2];
            if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
                throw std::system_error(errno, std::generic_category(), "socketpair");
            }
            const pid_t pid = ::fork();
            if (pid < 0) {
                const int err = errno;
                ::close(fds[0]);
                ::close(fds[1]);
                throw std::system_error(err, std::generic_category(), "fork");
            }
            if (pid == 0) {
                for (int fd : parent_fds) ::close(fd);
                ::close(fds[0]);
                worker_process_main(fds[1], spec.crash_after);
            }
            ::close(fds[1]);
            parent_fds.push_back(fds[0]);
            links.push_back(std::make_unique<ProcessLink>(spec, fds[0], pid));
        }
        std::vector<std::unique_ptr<WorkerLink>> out;
        for (auto& link : links) {
            link->start_reader();
            out.push_back(std::move(link));
        }
        return out;
    }
    std::string_view name() const noexcept override { return "socket"; }
};

}  // namespace

std::unique_ptr<Transport> make_in_process_transport() { return std::make_unique<InProcessTransport>(); }
std::unique_ptr<Transport> make_socket_transport() { return std::make_unique<SocketTransport>(); }

std::unique_ptr<Transport> make_transport(TransportKind kind) {
    return kind == TransportKind::Socket ? make_socket_transport() : make_in_process_transport();
}

}  // namespace agrimon
