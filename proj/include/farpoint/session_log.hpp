#pragma once

#include "farpoint/session.hpp"
#include "farpoint/wire.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace farpoint {

// Line-delimited session record. The first line may carry the session
// configuration; every other line is one message:
//   {"dir":"config","config":{...}}
//   {"dir":"in","msg":{...}}
//   {"dir":"out","msg":{...}}
struct LogRecord {
    LogDirection dir = LogDirection::in;
    WireMessage msg;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct SessionLog {
    std::optional<SessionConfig> config;
    std::vector<LogRecord> records;

    std::vector<WireMessage> inputs() const;
    std::vector<WireMessage> outputs() const;
};

std::string format_config_line(const SessionConfig& config);
std::string format_log_line(LogDirection dir, const WireMessage& msg);

class SessionLogWriter {
public:
    explicit SessionLogWriter(std::ostream& out) : out_(out) {}

    void write_config(const SessionConfig& config);
    void write(LogDirection dir, const WireMessage& msg);
    // Suitable as a Session log sink.
    Session::LogSink sink();

private:
    std::ostream& out_;
};

void write_session_log(std::ostream& out, const SessionLog& log);

// Parses and validates a log. Throws ReplayError carrying the 1-based line of
// the first corrupt record, or of a message whose seq does not increase over
// the previous one in the same direction.
SessionLog read_session_log(std::istream& in);

// The recorded input stream, in order.
std::vector<WireMessage> replay(const SessionLog& log);

// Feeds the recorded inputs to a fresh session built from the logged
// configuration and collects what it broadcasts. Throws ReplayError without
// a configuration line.
std::vector<WireMessage> rerun(const SessionLog& log);

struct ReplayCheck {
    std::size_t compared = 0;
    // Index into the output stream of the first difference, if any.
    std::optional<std::size_t> first_mismatch;

    bool identical() const { return !first_mismatch.has_value(); }
};

// Reruns the log and compares the fresh outputs to the recorded ones.
ReplayCheck verify_replay(const SessionLog& log);

} // namespace farpoint
