#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "agrimon/channel.hpp"
#include "agrimon/codec.hpp"

namespace agrimon {

/// A frame arriving from worker `worker`. `lost` marks a worker that died
/// without replying; its frame is empty.
struct Envelope {
    std::size_t worker = 0;
    wire::Frame frame;
    bool lost = false;
};

using Mailbox = Channel<Envelope>;

/// Worker-side state machine. Transport-agnostic: both transports feed it
/// decoded frames and ship back whatever it returns.
class WorkerSession {
public:
    /// Handles one request frame. Returns the reply, or nothing for Context and Shutdown.
    std::optional<wire::Frame> handle(const wire::Frame& request);

private:
    std::optional<wire::JobContext> context_;
};

/// Master-side handle to one worker.
class WorkerLink {
public:
    virtual ~WorkerLink() = default;
    /// False once the worker is known to be gone.
    virtual bool send(const wire::Frame& frame) = 0;
    /// Asks the worker to stop and waits for it.
    virtual void close() = 0;
};

struct WorkerSpec {
    std::size_t index = 0;
    /// Replies are tagged with `index` and pushed here.
    Mailbox* mailbox = nullptr;
    /// Fault injection: the worker dies on receiving task number crash_after + 1.
    std::optional<int> crash_after;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual std::vector<std::unique_ptr<WorkerLink>> start(std::span<const WorkerSpec> workers) = 0;
    virtual std::string_view name() const noexcept = 0;
};

enum class TransportKind { InProcess, Socket };

inline std::string_view transport_name(TransportKind kind) noexcept {
    return kind == TransportKind::Socket ? "socket" : "inproc";
}
inline std::optional<TransportKind> transport_from_name(std::string_view name) noexcept {
    if (name == "inproc") return TransportKind::InProcess;
    if (name == "socket") return TransportKind::Socket;
    return std::nullopt;
}

/// Worker threads fed through in-memory queues of encoded frames.
std::unique_ptr<Transport> make_in_process_transport();
/// Forked worker processes talking over Unix socket pairs. POSIX only.
std::unique_ptr<Transport> make_socket_transport();
std::unique_ptr<Transport> make_transport(TransportKind kind);

}  // namespace agrimon
