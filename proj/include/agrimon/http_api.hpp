#pragma once

#include <memory>
#include <string>
#include <thread>

#include "agrimon/portal.hpp"

namespace httplib {
class Server;
}

namespace agrimon {

/// JSON-over-HTTP front of a Portal. Routes are listed in docs/api.md.
class HttpApi {
public:
    explicit HttpApi(Portal& portal);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds `host:port`; port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocks.
    void listen();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    Portal& portal_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace agrimon
