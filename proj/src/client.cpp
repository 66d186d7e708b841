#include "farpoint/error.hpp"
#include "farpoint/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace farpoint {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct WsClient::Impl {
    asio::io_context io{1};
    websocket::stream<beast::tcp_stream> ws{io};
    beast::flat_buffer buf;
    bool open = false;
};

WsClient::WsClient(const std::string& host, unsigned short port) : impl_(std::make_unique<Impl>())
{
    try {
        tcp::resolver resolver(impl_->io);
        auto& socket = beast::get_lowest_layer(impl_->ws);
        socket.connect(resolver.resolve(host, std::to_string(port)));
        socket.socket().set_option(tcp::no_delay(true));
        impl_->ws.handshake(host + ":" + std::to_string(port), "/ws");
        impl_->ws.text(true);
        impl_->open = true;
    } catch (const boost::system::system_error& e) {
        throw NetworkError("cannot connect to ws://" + host + ":" + std::to_string(port) + "/ws: " + e.what());
    }
}

WsClient::~WsClient() { close(); }

void WsClient::send(const WireMessage& msg) { send_text(encode(msg)); }

void WsClient::send_text(const std::string& frame)
{
    if (!impl_->open)
        throw NetworkError("connection is closed");
    beast::error_code ec;
    impl_->ws.write(asio::buffer(frame), ec);
    if (ec) {
        impl_->open = false;
        throw NetworkError("send failed: " + ec.message());
    }
}

std::optional<WireMessage> WsClient::receive(std::chrono::milliseconds timeout)
{
    if (!impl_->open)
        throw NetworkError("connection is closed");
    bool done = false;
    beast::error_code ec;
    impl_->ws.async_read(impl_->buf, [&](beast::error_code e, std::size_t) {
        ec = e;
        done = true;
    });
    impl_->io.restart();
    impl_->io.run_for(timeout);
    if (!done) {
        // A cancelled websocket read leaves the stream unusable.
        beast::get_lowest_layer(impl_->ws).close();
        impl_->io.restart();
        impl_->io.run();
        impl_->open = false;
        return std::nullopt;
    }
    if (ec) {
        impl_->open = false;
        throw NetworkError("receive failed: " + ec.message());
    }
    const std::string text = beast::buffers_to_string(impl_->buf.data());
    impl_->buf.consume(impl_->buf.size());
    return decode(text);
}

SessionControlBody WsClient::join(const std::string& session, const std::string& role)
{
    SessionControlBody body;
    body.action = "join";
    body.role = role;
    send({session, 0, 0, body});
    for (;;) {
        const auto m = receive();
        if (!m)
            throw NetworkError("no reply to join");
        if (const auto* c = std::get_if<SessionControlBody>(&m->body); c && (c->action == "joined" || c->action == "error"))
            return *c;
    }
}

std::optional<WireMessage> WsClient::exchange(const WireMessage& probe)
{
    const auto* ping = std::get_if<SessionControlBody>(&probe.body);
    send(probe);
    for (;;) {
        auto m = receive(std::chrono::seconds(1));
        if (!m)
            return std::nullopt;
        const auto* c = std::get_if<SessionControlBody>(&m->body);
        if (c && c->action == "pong" && (!ping || c->probe_us == ping->probe_us))
            return m;
    }
}

bool WsClient::is_open() const { return impl_->open; }

void WsClient::close()
{
    if (!impl_->open)
        return;
    impl_->open = false;
    beast::error_code ec;
    impl_->ws.close(websocket::close_code::normal, ec);
}

LatencyReport measure_server_latency(const std::string& host, unsigned short port, std::size_t n,
                                     const std::optional<std::string>& post_to_session)
{
    WsClient client(host, port);
    if (post_to_session) {
        const auto r = client.join(*post_to_session, "consumer");
        if (r.action != "joined")
            throw NetworkError("join refused: " + r.detail.value_or(""));
    }
    SteadyClock clock;
    LatencyReport report = measure_latency(client, n, clock);
    if (post_to_session && client.is_open()) {
        SessionControlBody body;
        body.action = "latency_report";
        body.detail = to_json(report).dump();
        client.send({*post_to_session, 0, 0, body});
        for (;;) {
            const auto m = client.receive();
            const auto* c = m ? std::get_if<SessionControlBody>(&m->body) : nullptr;
            if (!m || (c && (c->action == "ack" || c->action == "error")))
                break;
        }
    }
    return report;
}

} // namespace farpoint
