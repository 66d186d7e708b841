#include "farpoint/server.hpp"

#include "farpoint/error.hpp"
#include "farpoint/session_log.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace farpoint {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxBacklog = 4096; // frames queued for one slow client

WireMessage reply(const std::string& session, std::string action, std::optional<std::string> detail = {})
{
    SessionControlBody b;
    b.action = std::move(action);
    b.detail = std::move(detail);
    // seq 0: connection-level replies sit outside the session's output stream.
    return {session, 0, 0, std::move(b)};
}

std::string file_safe(const std::string& id)
{
    std::string out;
    for (char c : id)
        out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
    return out.empty() || out[0] == '.' ? "_" + out : out;
}

std::filesystem::path fresh_log_path(const std::filesystem::path& dir, const std::string& id)
{
    const std::string base = file_safe(id);
    std::filesystem::path p = dir / (base + ".jsonl");
    for (int n = 2; std::filesystem::exists(p); ++n)
        p = dir / (base + "-" + std::to_string(n) + ".jsonl");
    return p;
}

struct Slot {
    std::ofstream file;
    std::unique_ptr<SessionLogWriter> writer;
    std::unique_ptr<Session> session;
    // Replayed to consumers that join mid-session.
    std::optional<WireMessage> last_cursor, last_stimulus;
};

struct Core {
    ServerSettings settings;
    SessionConfig session_template;

    mutable std::mutex slots_mutex; // the map itself; sessions lock their own state
    std::map<std::string, std::unique_ptr<Slot>> slots;

    asio::io_context io{1};
    std::optional<tcp::acceptor> acceptor;
    std::thread thread;
    unsigned short port = 0;

    Slot* find(const std::string& id)
    {
        std::lock_guard lock(slots_mutex);
        const auto it = slots.find(id);
        return it == slots.end() ? nullptr : it->second.get();
    }

    Slot& slot(const std::string& id)
    {
        if (Slot* s = find(id))
            return *s;
        auto s = std::make_unique<Slot>();
        SessionConfig config = session_template;
        config.session_id = id;
        if (!settings.log_dir.empty()) {
            std::filesystem::create_directories(settings.log_dir);
            const auto path = fresh_log_path(settings.log_dir, id);
            s->file.open(path);
            if (!s->file)
                throw Error("cannot write session log " + path.string());
            s->writer = std::make_unique<SessionLogWriter>(s->file);
            s->writer->write_config(config);
            spdlog::info("session {}: logging to {}", id, path.string());
        }
        Slot* raw = s.get();
        s->session = std::make_unique<Session>(config, [raw](LogDirection dir, const WireMessage& m) {
            if (raw->writer) {
                raw->writer->write(dir, m);
                raw->file.flush();
            }
            if (dir != LogDirection::out)
                return;
            if (m.type() == MessageType::cursor)
                raw->last_cursor = m;
            else if (m.type() == MessageType::stimulus)
                raw->last_stimulus = m;
        });
        spdlog::info("session {}: created ({})", id, to_string(config.technique));
        std::lock_guard lock(slots_mutex);
        return *slots.emplace(id, std::move(s)).first->second;
    }

    void accept();
};

class WsConn : public std::enable_shared_from_this<WsConn> {
public:
    WsConn(Core& core, tcp::socket&& socket) : core_(core), ws_(std::move(socket)) {}

    void start(http::request<http::string_body> req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.text(true);
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (!ec)
                self->read();
        });
    }

    void deliver(std::string text)
    {
        if (closed_)
            return;
        if (out_.size() >= kMaxBacklog)
            out_.erase(out_.begin() + 1); // the front may be in flight
        out_.push_back(std::move(text));
        if (!writing_)
            write();
    }

private:
    enum class Role { none, producer, consumer };

    void read()
    {
        ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed();
                return;
            }
            std::string text = beast::buffers_to_string(self->buf_.data());
            self->buf_.consume(self->buf_.size());
            self->handle(text);
            self->read();
        });
    }

    void write()
    {
        writing_ = true;
        ws_.async_write(asio::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->out_.pop_front();
            if (ec || self->out_.empty()) {
                self->writing_ = false;
                return;
            }
            self->write();
        });
    }

    void closed()
    {
        if (closed_)
            return;
        closed_ = true;
        leave();
    }

    void leave()
    {
        Slot* s = role_ == Role::none ? nullptr : core_.find(session_);
        if (s && role_ == Role::producer) {
            s->session->detach_producer();
            spdlog::info("session {}: producer left, paused", session_);
        } else if (s && role_ == Role::consumer) {
            s->session->detach_consumer(consumer_);
        }
        role_ = Role::none;
    }

    void send(const WireMessage& m) { deliver(encode(m)); }

    void handle(const std::string& text)
    {
        WireMessage m;
        try {
            m = decode(text);
        } catch (const Error& e) {
            send(reply(session_, "error", e.what()));
            return;
        }
        if (const auto* c = std::get_if<SessionControlBody>(&m.body)) {
            control(m, *c);
            return;
        }
        if (role_ != Role::producer) {
            send(reply(m.session, "error", "join as producer before sending input"));
            return;
        }
        Session& s = *core_.slot(session_).session;
        s.enqueue(std::move(m));
        s.pump();
    }

    void control(const WireMessage& m, const SessionControlBody& c)
    {
        if (c.action == "ping") {
            send(echo_reply(m, 0));
        } else if (c.action == "join") {
            join(m.session, c.role.value_or(""));
        } else if (c.action == "leave") {
            leave();
            send(reply(m.session, "left"));
        } else if (c.action == "info") {
            const std::string id = m.session.empty() ? session_ : m.session;
            if (Slot* s = core_.find(id))
                send(reply(id, "info", to_json(s->session->info()).dump()));
            else
                send(reply(id, "error", "no session '" + id + "'"));
        } else if (c.action == "latency_report") {
            store_latency(m, c);
        } else {
            send(reply(m.session, "error", "unknown action '" + c.action + "'"));
        }
    }

    void join(const std::string& id, const std::string& role)
    {
        if (role_ != Role::none) {
            send(reply(id, "error", "already joined '" + session_ + "'"));
            return;
        }
        if (role != "producer" && role != "consumer") {
            send(reply(id, "error", "role must be producer or consumer"));
            return;
        }
        Slot* slot = nullptr;
        try {
            slot = &core_.slot(id);
        } catch (const std::exception& e) {
            send(reply(id, "error", e.what()));
            return;
        }
        Session& s = *slot->session;
        SessionControlBody ok;
        ok.action = "joined";
        ok.role = role;
        ok.technique = std::string(to_string(s.info().technique));
        if (role == "producer") {
            if (!s.attach_producer()) {
                send(reply(id, "error", "session '" + id + "' already has a producer"));
                return;
            }
            role_ = Role::producer;
            if (const auto last = s.last_seq())
                ok.detail = std::to_string(*last);
            spdlog::info("session {}: producer joined", id);
        } else {
            consumer_ = s.attach_consumer([weak = weak_from_this()](const WireMessage& out) {
                if (auto self = weak.lock())
                    self->send(out);
            });
            role_ = Role::consumer;
        }
        session_ = id;
        send({id, 0, 0, ok});
        if (role_ == Role::consumer) {
            if (slot->last_stimulus)
                send(*slot->last_stimulus);
            if (slot->last_cursor)
                send(*slot->last_cursor);
        }
    }

    void store_latency(const WireMessage& m, const SessionControlBody& c)
    {
        Slot* s = role_ == Role::none ? nullptr : core_.find(session_);
        if (!s || !c.detail) {
            send(reply(m.session, "error", "latency_report needs a joined session and a detail"));
            return;
        }
        try {
            const auto j = nlohmann::json::parse(*c.detail);
            LatencyReport r;
            r.sent = j.at("sent").get<std::size_t>();
            r.received = j.at("received").get<std::size_t>();
            for (auto [key, field] : {std::pair{"p50_us", &LatencyReport::p50_us}, std::pair{"p90_us", &LatencyReport::p90_us},
                                      std::pair{"p99_us", &LatencyReport::p99_us}})
                if (j.contains(key) && !j[key].is_null())
                    r.*field = j[key].get<double>();
            s->session->set_latency(std::move(r));
            send(reply(session_, "ack"));
        } catch (const nlohmann::json::exception& e) {
            send(reply(session_, "error", std::string("bad latency report: ") + e.what()));
        }
    }

    Core& core_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buf_;
    std::deque<std::string> out_;
    bool writing_ = false;
    bool closed_ = false;
    Role role_ = Role::none;
    std::string session_;
    int consumer_ = 0;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
public:
    HttpConn(Core& core, tcp::socket&& socket) : core_(core), stream_(std::move(socket)) {}

    void start() { read(); }

private:
    void read()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (!ec)
                self->dispatch();
        });
    }

    void dispatch()
    {
        if (websocket::is_upgrade(req_) && req_.target() == "/ws") {
            stream_.expires_never();
            std::make_shared<WsConn>(core_, stream_.release_socket())->start(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(http::status::ok, req_.version());
        res->keep_alive(req_.keep_alive());
        if (req_.method() == http::verb::get && req_.target() == "/health") {
            res->set(http::field::content_type, "text/plain");
            res->body() = "ok\n";
        } else if (req_.method() == http::verb::get && req_.target() == "/sessions") {
            auto list = nlohmann::ordered_json::array();
            std::lock_guard lock(core_.slots_mutex);
            for (const auto& [id, slot] : core_.slots)
                list.push_back(to_json(slot->session->info()));
            res->set(http::field::content_type, "application/json");
            res->body() = list.dump();
        } else {
            res->result(http::status::not_found);
            res->set(http::field::content_type, "text/plain");
            res->body() = "not found\n";
        }
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec)
                return;
            if (!res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    Core& core_;
    beast::tcp_stream stream_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
};

void Core::accept()
{
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec == asio::error::operation_aborted)
            return;
        if (!ec) {
            socket.set_option(tcp::no_delay(true), ec);
            std::make_shared<HttpConn>(*this, std::move(socket))->start();
        }
        accept();
    });
}

} // namespace

ConfigJson to_json(const LatencyReport& r)
{
    auto opt = [](const std::optional<double>& v) { return v ? ConfigJson(*v) : ConfigJson(nullptr); };
    return {{"sent", r.sent},         {"received", r.received}, {"partial", r.partial()},
            {"p50_us", opt(r.p50_us)}, {"p90_us", opt(r.p90_us)}, {"p99_us", opt(r.p99_us)}};
}

ConfigJson to_json(const SessionInfo& info)
{
    const auto& c = info.counters;
    return {{"session_id", info.session_id},
            {"technique", std::string(to_string(info.technique))},
            {"producer_connected", info.producer_connected},
            {"paused", info.paused},
            {"consumers", info.consumers},
            {"counters",
             {{"received", c.received},
              {"accepted", c.accepted},
              {"dropped_seq", c.dropped_seq},
              {"dropped_overflow", c.dropped_overflow},
              {"dropped_time", c.dropped_time},
              {"rejected", c.rejected},
              {"clicks", c.clicks},
              {"broadcasts", c.broadcasts}}},
            {"latency", info.latency ? to_json(*info.latency) : ConfigJson(nullptr)}};
}

struct Server::Impl : Core {};

Server::Server(ServerSettings settings, SessionConfig session_template) : impl_(std::make_unique<Impl>())
{
    impl_->settings = std::move(settings);
    impl_->session_template = std::move(session_template);
}

Server::~Server() { stop(); }

namespace {

void bind(Core& core)
{
    try {
        tcp::resolver resolver(core.io);
        const auto endpoints = resolver.resolve(core.settings.host, std::to_string(core.settings.port));
        const tcp::endpoint ep = *endpoints.begin();
        core.acceptor.emplace(core.io);
        core.acceptor->open(ep.protocol());
        core.acceptor->set_option(asio::socket_base::reuse_address(true));
        core.acceptor->bind(ep);
        core.acceptor->listen();
        core.port = core.acceptor->local_endpoint().port();
    } catch (const boost::system::system_error& e) {
        throw NetworkError("cannot listen on " + core.settings.host + ":" + std::to_string(core.settings.port) +
                           ": " + e.what());
    }
    core.accept();
    spdlog::info("listening on ws://{}:{}/ws", core.settings.host, core.port);
}

} // namespace

unsigned short Server::start()
{
    bind(*impl_);
    impl_->thread = std::thread([this] { impl_->io.run(); });
    return impl_->port;
}

void Server::run()
{
    bind(*impl_);
    asio::signal_set signals(impl_->io, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code, int) { impl_->io.stop(); });
    impl_->io.run();
}

void Server::stop()
{
    impl_->io.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
    if (impl_->acceptor) {
        beast::error_code ignored;
        impl_->acceptor->close(ignored);
    }
    std::lock_guard lock(impl_->slots_mutex);
    for (auto& [id, slot] : impl_->slots)
        if (slot->file.is_open())
            slot->file.flush();
}

unsigned short Server::port() const { return impl_->port; }

std::vector<SessionInfo> Server::sessions() const
{
    std::vector<SessionInfo> out;
    std::lock_guard lock(impl_->slots_mutex);
    for (const auto& [id, slot] : impl_->slots)
        out.push_back(slot->session->info());
    return out;
}

} // namespace farpoint
