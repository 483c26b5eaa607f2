#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "hon/config.hpp"

namespace hon {

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::uint64_t seed = 0;      // 0 seeds from the system
};

// WebSocket front end for GatewayCore: one text frame per wire frame. All
// game logic runs on the single I/O thread; bot backends run on workers.
class WebSocketServer {
public:
    WebSocketServer(PlatformConfig config, ServerOptions options);
    ~WebSocketServer();

    // Bound port (useful with port 0).
    unsigned short port() const;
    // Blocks until stop() is called.
    void run();
    // Safe to call from any thread.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// "host:port" or ":port".
ServerOptions parse_listen_address(const std::string& address);

}  // namespace hon
