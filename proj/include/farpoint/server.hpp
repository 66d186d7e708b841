#pragma once

#include "farpoint/config.hpp"
#include "farpoint/latency.hpp"
#include "farpoint/session.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace farpoint {

// WebSocket session server. Frames go over ws://host:port/ws; plain HTTP
// GET /health and GET /sessions answer on the same port. See
// docs/protocol.md for the join handshake and control actions.
//
// All sessions live on one I/O thread, so each engine sees its frames in
// arrival order.
class Server {
public:
    // `session_template` configures every session; its id is replaced by
    // the id a client joins with.
    Server(ServerSettings settings, SessionConfig session_template);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and serves on a background thread. Port 0 picks a free port;
    // returns the bound one.
    unsigned short start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();

    unsigned short port() const;
    std::vector<SessionInfo> sessions() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ConfigJson to_json(const SessionInfo& info);
ConfigJson to_json(const LatencyReport& report); // samples omitted

// Blocking WebSocket client; also a latency probe transport.
class WsClient final : public ProbeTransport {
public:
    WsClient(const std::string& host, unsigned short port);
    ~WsClient() override;
    WsClient(const WsClient&) = delete;
    WsClient& operator=(const WsClient&) = delete;

    void send(const WireMessage& msg);
    void send_text(const std::string& frame);

    // Next frame. Throws NetworkError if the connection closes. On timeout
    // returns empty and the connection is closed.
    std::optional<WireMessage> receive(std::chrono::milliseconds timeout = std::chrono::seconds(5));

    // Sends a join and waits for the "joined" or "error" reply.
    SessionControlBody join(const std::string& session, const std::string& role);

    std::optional<WireMessage> exchange(const WireMessage& probe) override;

    bool is_open() const;
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// n ping probes against a server; the report is optionally posted to the
// session so that its info carries it.
LatencyReport measure_server_latency(const std::string& host, unsigned short port, std::size_t n,
                                     const std::optional<std::string>& post_to_session = {});

} // namespace farpoint
