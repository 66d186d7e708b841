#include "farpoint/session_log.hpp"

#include "farpoint/config.hpp"
#include "farpoint/error.hpp"

#include <istream>
#include <ostream>

namespace farpoint {

std::vector<WireMessage> SessionLog::inputs() const
{
    std::vector<WireMessage> out;
    for (const auto& r : records)
        if (r.dir == LogDirection::in)
            out.push_back(r.msg);
    return out;
}

std::vector<WireMessage> SessionLog::outputs() const
{
    std::vector<WireMessage> out;
    for (const auto& r : records)
        if (r.dir == LogDirection::out)
            out.push_back(r.msg);
    return out;
}

std::string format_config_line(const SessionConfig& config)
{
    ConfigJson j = {{"dir", "config"}, {"config", to_json(config)}};
    return j.dump();
}

std::string format_log_line(LogDirection dir, const WireMessage& msg)
{
    std::string line = dir == LogDirection::in ? R"({"dir":"in","msg":)" : R"({"dir":"out","msg":)";
    line += encode(msg);
    line += '}';
    return line;
}

void SessionLogWriter::write_config(const SessionConfig& config) { out_ << format_config_line(config) << '\n'; }

void SessionLogWriter::write(LogDirection dir, const WireMessage& msg) { out_ << format_log_line(dir, msg) << '\n'; }

Session::LogSink SessionLogWriter::sink()
{
    return [this](LogDirection dir, const WireMessage& msg) { write(dir, msg); };
}

void write_session_log(std::ostream& out, const SessionLog& log)
{
    SessionLogWriter w(out);
    if (log.config)
        w.write_config(*log.config);
    for (const auto& r : log.records)
        w.write(r.dir, r.msg);
}

SessionLog read_session_log(std::istream& in)
{
    SessionLog log;
    std::optional<std::uint64_t> last_in, last_out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty())
            continue;
        auto corrupt = [&](const std::string& what) {
            return ReplayError(what, number);
        };

        ConfigJson j;
        try {
            j = ConfigJson::parse(line);
        } catch (const ConfigJson::parse_error& e) {
            throw corrupt(e.what());
        }
        if (!j.is_object() || !j.contains("dir") || !j["dir"].is_string())
            throw corrupt("missing \"dir\"");
        const std::string dir = j["dir"].get<std::string>();

        if (dir == "config") {
            if (number != 1 || log.config || !log.records.empty())
                throw corrupt("configuration must be the first line");
            if (!j.contains("config"))
                throw corrupt("missing \"config\"");
            try {
                SessionConfig c;
                from_json(j["config"], c);
                log.config = std::move(c);
            } catch (const Error& e) {
                throw corrupt(e.what());
            }
            continue;
        }
        if (dir != "in" && dir != "out")
            throw corrupt("unknown direction '" + dir + "'");
        if (!j.contains("msg"))
            throw corrupt("missing \"msg\"");

        LogRecord rec;
        rec.dir = dir == "in" ? LogDirection::in : LogDirection::out;
        try {
            rec.msg = decode(j["msg"].dump());
        } catch (const Error& e) {
            throw corrupt(e.what());
        }
        auto& last = rec.dir == LogDirection::in ? last_in : last_out;
        if (last && rec.msg.seq <= *last)
            throw corrupt("seq " + std::to_string(rec.msg.seq) + " does not follow " + std::to_string(*last));
        last = rec.msg.seq;
        log.records.push_back(std::move(rec));
    }
    return log;
}

std::vector<WireMessage> replay(const SessionLog& log) { return log.inputs(); }

std::vector<WireMessage> rerun(const SessionLog& log)
{
    if (!log.config)
        throw ReplayError("log has no configuration line", 0);
    std::vector<WireMessage> outputs;
    Session session(*log.config, [&](LogDirection dir, const WireMessage& msg) {
        if (dir == LogDirection::out)
            outputs.push_back(msg);
    });
    for (const auto& r : log.records)
        if (r.dir == LogDirection::in)
            session.submit(r.msg);
    return outputs;
}

ReplayCheck verify_replay(const SessionLog& log)
{
    const auto fresh = rerun(log);
    const auto recorded = log.outputs();
    ReplayCheck check;
    check.compared = std::min(fresh.size(), recorded.size());
    for (std::size_t i = 0; i < check.compared; ++i) {
        if (encode(fresh[i]) != encode(recorded[i])) {
            check.first_mismatch = i;
            return check;
        }
    }
    if (fresh.size() != recorded.size())
        check.first_mismatch = check.compared;
    return check;
}

} // namespace farpoint
