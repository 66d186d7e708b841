#include "farpoint/latency.hpp"

#include "farpoint/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace farpoint {

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw DomainError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

LatencyReport make_report(std::size_t sent, std::vector<double> one_way_us)
{
    LatencyReport r;
    r.sent = sent;
    r.received = one_way_us.size();
    if (!one_way_us.empty()) {
        r.p50_us = percentile(one_way_us, 0.50);
        r.p90_us = percentile(one_way_us, 0.90);
        r.p99_us = percentile(one_way_us, 0.99);
    }
    r.samples_us = std::move(one_way_us);
    return r;
}

TimeUs SteadyClock::now_us()
{
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

LatencyReport measure_latency(ProbeTransport& transport, std::size_t n, Clock& clock)
{
    std::vector<double> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        WireMessage probe;
        probe.session = "latency";
        probe.seq = i + 1;
        const TimeUs sent = clock.now_us();
        probe.t_us = sent;
        probe.body = SessionControlBody{"ping", std::nullopt, std::nullopt, std::nullopt, sent};

        const auto echo = transport.exchange(probe);
        const TimeUs back = clock.now_us();
        if (!echo)
            continue;
        const auto* body = std::get_if<SessionControlBody>(&echo->body);
        if (!body || body->action != "pong" || body->probe_us != sent)
            continue;
        samples.push_back(static_cast<double>(back - sent) / 2.0);
    }
    return make_report(n, std::move(samples));
}

WireMessage echo_reply(const WireMessage& ping, std::uint64_t seq)
{
    WireMessage pong;
    pong.session = ping.session;
    pong.seq = seq;
    pong.t_us = ping.t_us;
    SessionControlBody body{"pong", std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    if (const auto* c = std::get_if<SessionControlBody>(&ping.body))
        body.probe_us = c->probe_us;
    pong.body = body;
    return pong;
}

std::optional<WireMessage> VirtualDelayTransport::exchange(const WireMessage& probe)
{
    clock_.advance(delay_);
    auto reply = echo_reply(probe, probe.seq);
    clock_.advance(delay_);
    return reply;
}

std::optional<WireMessage> SpinDelayTransport::exchange(const WireMessage& probe)
{
    const auto spin = [this](TimeUs until) {
        while (clock_.now_us() < until) {
        }
    };
    spin(clock_.now_us() + delay_);
    auto reply = echo_reply(probe, probe.seq);
    spin(clock_.now_us() + delay_);
    return reply;
}

} // namespace farpoint
