#pragma once

#include "farpoint/engine.hpp"
#include "farpoint/experiment.hpp"
#include "farpoint/latency.hpp"
#include "farpoint/wire.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace farpoint {

struct SessionConfig {
    std::string session_id = "session";
    // Technique when no study runs; with a study, each block picks its own.
    Technique technique = Technique::absolute;
    DisplayPlane display = DisplayPlane::tiled_wall();
    FilterParams filter;
    TransferParams hybrid_transfer = TransferParams::hybrid();
    TransferParams relative_transfer = TransferParams::relative();
    TechniqueOptions options;
    std::optional<StudyDesign> study;
    std::size_t queue_capacity = 32;

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;

    EngineConfig engine_for(Technique t) const;
};

struct SessionCounters {
    std::uint64_t received = 0;
    std::uint64_t accepted = 0;
    std::uint64_t dropped_seq = 0;      // seq did not increase
    std::uint64_t dropped_overflow = 0; // evicted from a full inbound queue
    std::uint64_t dropped_time = 0;     // timestamp went backwards
    std::uint64_t rejected = 0;         // invalid pose, wrong session, non-input type
    std::uint64_t clicks = 0;
    std::uint64_t broadcasts = 0;

    friend bool operator==(const SessionCounters&, const SessionCounters&) = default;
};

struct SessionInfo {
    std::string session_id;
    Technique technique = Technique::absolute;
    bool producer_connected = false;
    bool paused = false;
    std::size_t consumers = 0;
    SessionCounters counters;
    std::optional<LatencyReport> latency;
};

enum class LogDirection { in, out };

// Per-session pipeline: orders and validates producer frames, runs the cursor
// engine and the study, and broadcasts cursor/stimulus/click results.
//
// enqueue() may be called from any thread. pump() and everything it triggers
// must be serialised by the caller (one logical consumer per session).
class Session {
public:
    using Sink = std::function<void(const WireMessage&)>;
    using LogSink = std::function<void(LogDirection, const WireMessage&)>;

    explicit Session(SessionConfig config, LogSink log = {});

    const SessionConfig& config() const { return config_; }
    const std::string& id() const { return config_.session_id; }

    int attach_consumer(Sink sink);
    void detach_consumer(int handle);

    // False if another producer already owns the session.
    bool attach_producer();
    // Pauses the session until a producer attaches again. Consumers get a
    // "paused" / "resumed" control frame with seq 0.
    void detach_producer();

    // Emits the opening cursor and stimulus. Idempotent.
    void start();

    // Bounded inbound queue; the oldest frame is evicted when full.
    void enqueue(WireMessage msg);
    // Processes everything queued. Returns the number of frames taken.
    std::size_t pump();
    // enqueue + pump for single-threaded callers.
    void submit(WireMessage msg);

    SessionInfo info() const;
    // Highest accepted producer seq; a resuming producer continues above it.
    std::optional<std::uint64_t> last_seq() const { return last_seq_; }
    void set_latency(LatencyReport report);

    const CursorEngine& engine() const { return engine_; }
    const StudyRunner* study() const { return study_ ? &*study_ : nullptr; }

private:
    void process(const WireMessage& msg);
    void apply(const InputEvent& event);
    void broadcast(MessageBody body, TimeUs t_us);
    void notify(const std::string& action);
    void emit_stimulus(TimeUs t_us);
    void sync_technique();

    SessionConfig config_;
    LogSink log_;
    CursorEngine engine_;
    std::optional<StudyRunner> study_;

    mutable std::mutex mutex_; // guards queue_, consumers_, producer/paused flags, counters_
    std::deque<WireMessage> queue_;
    std::map<int, Sink> consumers_;
    int next_consumer_ = 1;
    bool producer_ = false;
    bool paused_ = false;
    SessionCounters counters_;
    std::optional<LatencyReport> latency_;

    bool started_ = false;
    std::optional<std::uint64_t> last_seq_;
    std::uint64_t out_seq_ = 0;
    PixelPoint last_cursor_;
    Mode last_mode_ = Mode::absolute;
    bool cursor_sent_ = false;
};

// Maps a producer message onto an engine event; empty for non-input types.
std::optional<InputEvent> to_input_event(const WireMessage& msg);

} // namespace farpoint
