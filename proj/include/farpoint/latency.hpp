#pragma once

#include "farpoint/geometry.hpp"
#include "farpoint/wire.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace farpoint {

struct LatencyReport {
    std::size_t sent = 0;
    std::size_t received = 0;
    // One-way latency, microseconds (half the round trip).
    std::optional<double> p50_us;
    std::optional<double> p90_us;
    std::optional<double> p99_us;
    std::vector<double> samples_us;

    // Fewer echoes came back than probes went out.
    bool partial() const { return received < sent; }
};

// Linear-interpolated percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

LatencyReport make_report(std::size_t sent, std::vector<double> one_way_us);

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimeUs now_us() = 0;
};

class SteadyClock final : public Clock {
public:
    TimeUs now_us() override;
};

// Test clock that only moves when told to.
class ManualClock final : public Clock {
public:
    TimeUs now_us() override { return now_; }
    void advance(TimeUs us) { now_ += us; }

private:
    TimeUs now_ = 0;
};

// Sends one probe and blocks until its echo returns; empty if it never does.
class ProbeTransport {
public:
    virtual ~ProbeTransport() = default;
    virtual std::optional<WireMessage> exchange(const WireMessage& probe) = 0;
};

// Sends n ping probes stamped with the clock and reports RTT/2 percentiles.
LatencyReport measure_latency(ProbeTransport& transport, std::size_t n, Clock& clock);

// Echo with a fixed one-way delay on a ManualClock: the delay is exact.
class VirtualDelayTransport final : public ProbeTransport {
public:
    VirtualDelayTransport(ManualClock& clock, TimeUs one_way_us) : clock_(clock), delay_(one_way_us) {}
    std::optional<WireMessage> exchange(const WireMessage& probe) override;

private:
    ManualClock& clock_;
    TimeUs delay_;
};

// Echo that busy-waits the one-way delay in real time, each direction.
class SpinDelayTransport final : public ProbeTransport {
public:
    explicit SpinDelayTransport(TimeUs one_way_us) : delay_(one_way_us) {}
    std::optional<WireMessage> exchange(const WireMessage& probe) override;

private:
    SteadyClock clock_;
    TimeUs delay_;
};

// The pong a server sends for a ping.
WireMessage echo_reply(const WireMessage& ping, std::uint64_t seq);

} // namespace farpoint
