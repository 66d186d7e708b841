#include "farpoint/analysis.hpp"
#include "farpoint/config.hpp"
#include "farpoint/error.hpp"
#include "farpoint/server.hpp"
#include "farpoint/session_log.hpp"
#include "farpoint/simulator.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace farpoint;

namespace {

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    return out;
}

// Flags win over the environment, which wins over the configuration file.
void apply_env(std::string& host, int& port)
{
    if (const char* h = std::getenv("FARPOINT_HOST"); h && host.empty())
        host = h;
    if (const char* p = std::getenv("FARPOINT_PORT"); p && port < 0) {
        const std::string_view text(p);
        int value = -1;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || end != text.data() + text.size() || value < 0 || value > 65535)
            throw ConfigError("FARPOINT_PORT: not a port number: '" + std::string(text) + "'");
        port = value;
    }
}

AppConfig config_or_default(const std::string& path)
{
    return path.empty() ? AppConfig{} : load_config(path);
}

void print_fits(std::span<const TechniqueFit> fits)
{
    fmt::print("{:<12} {:>8} {:>8} {:>8} {:>6} {:>10}\n", "technique", "a_s", "b_s_bit", "rmse_s", "r2", "tp_bit_s");
    for (const auto& f : fits) {
        const auto tp = f.fit.throughput();
        fmt::print("{:<12} {:>8.3f} {:>8.3f} {:>8.3f} {:>6.3f} {:>10}\n", to_string(f.technique), f.fit.a, f.fit.b,
                   f.fit.rmse, f.fit.r_squared, tp ? fmt::format("{:.3f}", *tp) : "-");
    }
    for (std::size_t i = 0; i < fits.size(); ++i)
        for (std::size_t j = i + 1; j < fits.size(); ++j) {
            if (fits[i].fit.b == fits[j].fit.b)
                continue;
            fmt::print("crossover {} / {}: ID {:.2f}\n", to_string(fits[i].technique), to_string(fits[j].technique),
                       crossover_id(fits[i].fit, fits[j].fit));
        }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"farpoint: distant pointing engine, session server and study tools"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the WebSocket session server");
    std::string serve_config;
    std::string host;
    int port = -1;
    std::string log_dir;
    serve->add_option("-c,--config", serve_config, "Configuration file")->check(CLI::ExistingFile);
    serve->add_option("--host", host, "Bind address [env FARPOINT_HOST]");
    serve->add_option("-p,--port", port, "Port, 0 for any free port [env FARPOINT_PORT]")->check(CLI::Range(0, 65535));
    serve->add_option("--log-dir", log_dir, "Write one session log per session here");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run a study against the simulated participant");
    std::string sim_config;
    std::vector<std::string> techniques;
    std::uint64_t seed = 1;
    int participants = 1;
    int sets = 0;
    bool no_practice = false;
    std::string results_path = "results.csv";
    std::string sim_log;
    simulate->add_option("-c,--config", sim_config, "Scenario file")->check(CLI::ExistingFile);
    simulate->add_option("-t,--technique", techniques, "Techniques to run (default: all four)");
    simulate->add_option("-s,--seed", seed, "Seed of the first participant");
    simulate->add_option("-n,--participants", participants, "Simulated participants, seeds seed, seed+1, ...")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--sets", sets, "Formal sets per condition")->check(CLI::PositiveNumber);
    simulate->add_flag("--no-practice", no_practice, "Skip practice blocks");
    simulate->add_option("-o,--out", results_path, "Trial results file");
    simulate->add_option("--log", sim_log, "Session log of the first participant");

    // replay
    auto* replay_cmd = app.add_subcommand("replay", "Rerun a session log through a fresh engine");
    std::string replay_path;
    bool print_stream = false;
    replay_cmd->add_option("log", replay_path, "Session log")->required()->check(CLI::ExistingFile);
    replay_cmd->add_flag("--print", print_stream, "Print the regenerated output frames");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Summarize trial results per condition");
    std::string analyze_in;
    std::string analyze_out;
    analyze->add_option("results", analyze_in, "Trial results file")->required()->check(CLI::ExistingFile);
    analyze->add_option("-o,--out", analyze_out, "Conditions file (default: stdout)");

    // fit
    auto* fit = app.add_subcommand("fit", "Fitts regression per technique");
    std::string fit_in;
    bool fit_conditions = false;
    fit->add_option("file", fit_in, "Trial results file")->required()->check(CLI::ExistingFile);
    fit->add_flag("--conditions", fit_conditions, "Input is a conditions file from analyze");

    // report
    auto* report = app.add_subcommand("report", "Write condition, fit and accuracy tables");
    std::string report_in;
    std::string report_dir = ".";
    ReportFormat format = ReportFormat::txt;
    const std::map<std::string, ReportFormat> formats{{"csv", ReportFormat::csv}, {"txt", ReportFormat::txt}};
    report->add_option("results", report_in, "Trial results file")->required()->check(CLI::ExistingFile);
    report->add_option("-f,--format", format, "csv or txt")->transform(CLI::CheckedTransformer(formats));
    report->add_option("-o,--out-dir", report_dir, "Output directory");

    // latency
    auto* latency = app.add_subcommand("latency", "Measure one-way latency to a running server");
    std::string lat_host;
    int lat_port = -1;
    std::size_t probes = 1000;
    std::string lat_session;
    latency->add_option("--host", lat_host, "Server address [env FARPOINT_HOST]");
    latency->add_option("-p,--port", lat_port, "Server port [env FARPOINT_PORT]")->check(CLI::Range(1, 65535));
    latency->add_option("-n,--probes", probes, "Probe count")->check(CLI::PositiveNumber);
    latency->add_option("--session", lat_session, "Post the report to this session");

    // config
    auto* config_cmd = app.add_subcommand("config", "Print the default configuration, or check a file");
    std::string check_path;
    config_cmd->add_option("file", check_path, "Configuration file to validate and print in full")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*serve) {
            apply_env(host, port);
            const auto config = config_or_default(serve_config);
            ServerSettings settings = config.server;
            if (!host.empty())
                settings.host = host;
            if (port >= 0)
                settings.port = static_cast<unsigned short>(port);
            if (!log_dir.empty())
                settings.log_dir = log_dir;
            Server server(settings, config.scenario.session);
            server.run();
            return 0;
        }

        if (*config_cmd) {
            AppConfig c = config_or_default(check_path);
            if (check_path.empty())
                c.scenario.session.study = StudyDesign{};
            fmt::print("{}\n", to_json(c).dump(2));
            return 0;
        }

        if (*simulate) {
            SimScenario sc = config_or_default(sim_config).scenario;
            StudyDesign design = sc.session.study.value_or(StudyDesign{});
            if (!techniques.empty()) {
                design.techniques.clear();
                for (const auto& t : techniques)
                    design.techniques.push_back(technique_from_string(t));
            }
            if (sets > 0)
                design.sets_per_condition = sets;
            if (no_practice)
                design.practice.enabled = false;
            std::vector<TrialRow> rows;
            for (int p = 0; p < participants; ++p) {
                const std::uint64_t s = seed + static_cast<std::uint64_t>(p);
                SimScenario run = sc;
                StudyDesign d = design;
                d.seed = s;
                d.participant_index = static_cast<int>(s);
                run.session.study = d;
                run.human.rng_seed = s;
                if (participants > 1)
                    run.session.session_id = sc.session.session_id + "-" + std::to_string(s);
                const bool keep_log = p == 0 && !sim_log.empty();
                const auto r = simulate_run(run, {keep_log, false});
                if (keep_log) {
                    auto out = open_out(sim_log);
                    write_session_log(out, r.log);
                }
                const auto part = to_rows(run.session.session_id, r.formal);
                rows.insert(rows.end(), part.begin(), part.end());
                spdlog::info("participant {} (seed {}): {} trials", p + 1, s, part.size());
            }
            auto out = open_out(results_path);
            write_results(out, rows);
            fmt::print("{} trials written to {}\n", rows.size(), results_path);
            return 0;
        }

        if (*replay_cmd) {
            auto in = open_in(replay_path);
            const auto log = read_session_log(in);
            if (print_stream)
                for (const auto& m : rerun(log))
                    fmt::print("{}\n", encode(m));
            const auto check = verify_replay(log);
            if (!check.identical()) {
                fmt::print(stderr, "replay differs at output {} of {}\n", *check.first_mismatch, log.outputs().size());
                return 1;
            }
            fmt::print(stderr, "replay identical: {} inputs, {} outputs\n", log.inputs().size(), check.compared);
            return 0;
        }

        if (*analyze) {
            auto in = open_in(analyze_in);
            const auto summaries = summarize(read_results(in));
            if (analyze_out.empty()) {
                write_conditions_csv(std::cout, summaries);
            } else {
                auto out = open_out(analyze_out);
                write_conditions_csv(out, summaries);
            }
            return 0;
        }

        if (*fit) {
            auto in = open_in(fit_in);
            const auto summaries = fit_conditions ? read_conditions_csv(in) : summarize(read_results(in));
            print_fits(fit_by_technique(summaries));
            return 0;
        }

        if (*report) {
            auto in = open_in(report_in);
            const auto summaries = summarize(read_results(in));
            const auto fits = fit_by_technique(summaries);
            const auto result = emit_report(summaries, fits, format, report_dir);
            for (const auto& w : result.warnings)
                spdlog::warn("{}", w);
            for (const auto& f : result.files)
                fmt::print("{}\n", f.string());
            return 0;
        }

        if (*latency) {
            apply_env(lat_host, lat_port);
            const ServerSettings defaults;
            if (lat_host.empty())
                lat_host = defaults.host;
            if (lat_port <= 0)
                lat_port = defaults.port;
            const auto r = measure_server_latency(lat_host, static_cast<unsigned short>(lat_port), probes,
                                                  lat_session.empty() ? std::nullopt : std::optional(lat_session));
            fmt::print("{}\n", to_json(r).dump());
            return r.partial() ? 1 : 0;
        }
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
