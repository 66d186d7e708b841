#pragma once

#include "farpoint/engine.hpp"
#include "farpoint/experiment.hpp"
#include "farpoint/session.hpp"
#include "farpoint/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace farpoint {

using ConfigJson = nlohmann::ordered_json;

// Every from_json below starts from the defaults, overrides the keys that are
// present and throws ConfigError on unknown keys or mistyped values.

ConfigJson to_json(const DisplayPlane& d);
void from_json(const ConfigJson& j, DisplayPlane& d);
ConfigJson to_json(const FilterParams& p);
void from_json(const ConfigJson& j, FilterParams& p);
ConfigJson to_json(const TransferParams& p);
void from_json(const ConfigJson& j, TransferParams& p);
ConfigJson to_json(const TechniqueOptions& o);
void from_json(const ConfigJson& j, TechniqueOptions& o);
ConfigJson to_json(const PracticeRules& r);
void from_json(const ConfigJson& j, PracticeRules& r);
ConfigJson to_json(const StudyDesign& s);
void from_json(const ConfigJson& j, StudyDesign& s);
ConfigJson to_json(const HumanModel& h);
void from_json(const ConfigJson& j, HumanModel& h);

// Session layout:
//   {"session_id", "technique": {"name", ...options}, "display", "filter",
//    "transfer": {"hybrid", "relative"}, "study" (optional), "queue_capacity"}
ConfigJson to_json(const SessionConfig& c);
void from_json(const ConfigJson& j, SessionConfig& c);

// Scenario layout: a session object plus "human" and "scenario" sections.
ConfigJson to_json(const SimScenario& s);
void from_json(const ConfigJson& j, SimScenario& s);

struct ServerSettings {
    std::string host = "127.0.0.1";
    unsigned short port = 8765;
    std::string log_dir; // empty: no session logs
    friend bool operator==(const ServerSettings&, const ServerSettings&) = default;
};
ConfigJson to_json(const ServerSettings& s);
void from_json(const ConfigJson& j, ServerSettings& s);

// Whole configuration file: the scenario sections plus "server".
struct AppConfig {
    SimScenario scenario;
    ServerSettings server;
    friend bool operator==(const AppConfig&, const AppConfig&) = default;
};
ConfigJson to_json(const AppConfig& c);
void from_json(const ConfigJson& j, AppConfig& c);

// Throws ConfigError naming the file on read, parse or validation failure.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const std::string& text);

} // namespace farpoint
