#include "farpoint/config.hpp"
#include "farpoint/error.hpp"
#include "farpoint/session_log.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace farpoint;

namespace {

const DisplayPlane wall = DisplayPlane::tiled_wall();

PoseBody pose_towards(const PixelPoint& p)
{
    const Vec3 hand{0.0, 1.155, 2.0};
    const auto [yaw, pitch] = aim_angles(hand, wall.point_at(p));
    return {aim_pose(hand, yaw, pitch, 0).matrix, 0};
}

// A short live session recorded through the log writer.
std::string recorded_session()
{
    SessionConfig c;
    c.session_id = "rec";
    c.technique = Technique::hybrid;
    std::ostringstream out;
    SessionLogWriter w(out);
    w.write_config(c);
    Session s(c, w.sink());
    std::uint64_t seq = 0;
    for (int i = 0; i < 120; ++i) {
        const TimeUs t = i * 11111;
        s.submit({"rec", ++seq, t, pose_towards({1000.0 + 30 * i, 2000})});
        if (i == 40)
            s.submit({"rec", ++seq, t, TouchBody{TouchPhase::down, {0, 0}}});
        if (i > 40 && i < 60)
            s.submit({"rec", ++seq, t, TouchBody{TouchPhase::move, {0.001 * (i - 40), 0}}});
        if (i == 60)
            s.submit({"rec", ++seq, t, TouchBody{TouchPhase::up, {0, 0}}});
        if (i == 100)
            s.submit({"rec", ++seq, t, ButtonBody{ButtonName::pad, ButtonEdge::press}});
    }
    return out.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

std::string joined(const std::vector<std::string>& lines)
{
    std::string s;
    for (const auto& l : lines)
        s += l + "\n";
    return s;
}

} // namespace

TEST_CASE("config: defaults round trip")
{
    AppConfig c;
    c.scenario.session.study = StudyDesign{};
    const auto text = to_json(c).dump(2);
    CHECK(parse_config(text) == c);
}

TEST_CASE("config: edited values round trip")
{
    AppConfig c;
    auto& s = c.scenario.session;
    s.session_id = "p07";
    s.technique = Technique::dual_speed;
    s.options.slow_gain = 0.25;
    s.options.dual_speed_release = ReleaseBehavior::instant;
    s.filter.beta = 0.02;
    s.relative_transfer.cd_max = 150;
    s.queue_capacity = 64;
    StudyDesign d;
    d.techniques = {Technique::hybrid, Technique::absolute};
    d.sets_per_condition = 3;
    d.seed = 12345678901234ull;
    d.practice.max_sets = 8;
    s.study = d;
    c.scenario.human.tremor_rms_deg = 0.2;
    c.scenario.human.rng_seed = 99;
    c.scenario.stand_position = {0.2, 1.1, 2.5};
    c.server.port = 9001;
    c.server.log_dir = "/tmp/logs";
    CHECK(parse_config(to_json(c).dump()) == c);
}

TEST_CASE("config: sparse files fill in defaults")
{
    const auto c = parse_config(R"({"technique":{"name":"relative","tap_max_ms":200},"server":{"port":7000}})");
    CHECK(c.scenario.session.technique == Technique::relative);
    CHECK(c.scenario.session.options.tap_max_ms == 200);
    CHECK(c.scenario.session.options.clutch_ms == 400);
    CHECK(c.server.port == 7000);
    CHECK(c.server.host == "127.0.0.1");
    CHECK_FALSE(c.scenario.session.study);
    CHECK(parse_config("{}").scenario.session.display == wall);
}

TEST_CASE("config: errors name the offending key")
{
    CHECK_THROWS_WITH_AS(parse_config(R"({"filter":{"f_min":0.3}})"), doctest::Contains("'f_min'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"human":{"tremor_rms_deg":"lots"}})"),
                         doctest::Contains("tremor_rms_deg"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"technique":{"name":"laser"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"server":{"port":70000}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"filter":{"f_min_hz":-1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"queue_capacity":0})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"study":{"widths_px":[25,5000]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("{} trailing"), ConfigError);
}

TEST_CASE("config: unreachable targets are a scenario error")
{
    CHECK_THROWS_AS(parse_config(R"({"study":{"amplitudes_px":[7700]}})"), Error);
}

TEST_CASE("config: files")
{
    const auto path = std::filesystem::temp_directory_path() / "farpoint_test_config.json";
    AppConfig c;
    c.server.port = 8123;
    std::ofstream(path) << to_json(c).dump(2);
    CHECK(load_config(path) == c);
    CHECK_THROWS_WITH_AS(load_config(path.string() + ".missing"), doctest::Contains("cannot read"), ConfigError);
    std::ofstream(path) << R"({"bogus":1})";
    const std::string where = path.string();
    CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains(where.c_str()), ConfigError);
}

TEST_CASE("session config round trips on its own")
{
    SessionConfig c;
    c.technique = Technique::hybrid;
    SessionConfig back;
    from_json(to_json(c), back);
    CHECK(back == c);
    CHECK(to_json(c)["study"].is_null());
}

TEST_CASE("log: lines")
{
    const WireMessage m{"s", 4, 10, ButtonBody{}};
    CHECK(format_log_line(LogDirection::in, m) == R"({"dir":"in","msg":)" + encode(m) + "}");
    CHECK(format_log_line(LogDirection::out, m).rfind(R"({"dir":"out",)", 0) == 0);
    CHECK(format_config_line(SessionConfig{}).rfind(R"({"dir":"config","config":{"session_id")", 0) == 0);
}

TEST_CASE("log: write and read back")
{
    const auto text = recorded_session();
    std::istringstream in(text);
    const auto log = read_session_log(in);
    REQUIRE(log.config);
    CHECK(log.config->session_id == "rec");
    CHECK(log.inputs().size() == 142); // 120 poses, 21 touches, 1 press
    CHECK(log.outputs().size() > 50);

    std::ostringstream again;
    write_session_log(again, log);
    CHECK(again.str() == text);
    CHECK(replay(log) == log.inputs());
}

TEST_CASE("log: rerun reproduces the recorded outputs")
{
    std::istringstream in(recorded_session());
    const auto log = read_session_log(in);
    const auto check = verify_replay(log);
    CHECK(check.identical());
    CHECK(check.compared == log.outputs().size());
    CHECK(rerun(log) == log.outputs());
}

TEST_CASE("log: a doctored output is caught")
{
    std::istringstream in(recorded_session());
    auto log = read_session_log(in);
    std::size_t k = 0;
    for (auto& r : log.records) {
        if (r.dir != LogDirection::out)
            continue;
        if (++k == 10)
            if (auto* c = std::get_if<CursorBody>(&r.msg.body))
                c->position.x += 1e-9;
    }
    const auto check = verify_replay(log);
    CHECK_FALSE(check.identical());
    CHECK(check.first_mismatch == 9u);
}

TEST_CASE("log: empty input is an empty stream")
{
    std::istringstream in("");
    const auto log = read_session_log(in);
    CHECK_FALSE(log.config);
    CHECK(replay(log).empty());
    CHECK_THROWS_AS(rerun(log), ReplayError);
}

TEST_CASE("log: an altered seq halts at its line")
{
    auto lines = lines_of(recorded_session());
    // Line 30 (1-based) becomes a copy of an earlier record in the same direction.
    std::size_t target = 29;
    while (lines[target].find(R"("dir":"in")") == std::string::npos)
        ++target;
    std::size_t earlier = target - 1;
    while (lines[earlier].find(R"("dir":"in")") == std::string::npos)
        --earlier;
    lines[target] = lines[earlier];
    std::istringstream in(joined(lines));
    try {
        read_session_log(in);
        FAIL("accepted a repeated seq");
    } catch (const ReplayError& e) {
        CHECK(e.line() == target + 1);
        CHECK(std::string(e.what()).rfind("line " + std::to_string(target + 1) + ": ", 0) == 0);
    }
}

TEST_CASE("log: corrupt records halt with their line")
{
    auto lines = lines_of(recorded_session());
    SUBCASE("garbage")
    {
        lines[6] = "{\"dir\":\"in\",\"msg\":";
    }
    SUBCASE("unknown direction")
    {
        lines[6] = R"({"dir":"sideways","msg":{}})";
    }
    SUBCASE("bad message")
    {
        lines[6] = R"({"dir":"in","msg":{"v":1,"type":"pose"}})";
    }
    SUBCASE("late config")
    {
        lines[6] = lines[0];
    }
    std::istringstream in(joined(lines));
    try {
        read_session_log(in);
        FAIL("accepted a corrupt record");
    } catch (const ReplayError& e) {
        CHECK(e.line() == 7);
    }
}
