#include "farpoint/engine.hpp"
#include "farpoint/error.hpp"
#include "farpoint/random.hpp"

#include <doctest.h>

#include <vector>

using namespace farpoint;

namespace {

const DisplayPlane wall = DisplayPlane::tiled_wall();
const Vec3 hand{0.0, 1.155, 2.0};

InputEvent pose_at(const PixelPoint& p, TimeUs t)
{
    const auto [yaw, pitch] = aim_angles(hand, wall.point_at(p));
    return {t, input::Pose{aim_pose(hand, yaw, pitch, t)}};
}
InputEvent down(TimeUs t, SurfacePoint at = {}) { return {t, input::TouchDown{at}}; }
InputEvent move(TimeUs t, SurfacePoint at) { return {t, input::TouchMove{at}}; }
InputEvent up(TimeUs t) { return {t, input::TouchUp{}}; }
InputEvent press(TimeUs t) { return {t, input::PadPress{}}; }

TimeUs ms(double v) { return static_cast<TimeUs>(std::llround(v * 1000)); }

CursorEngine make(Technique t)
{
    EngineConfig c;
    c.technique = t;
    c.transfer = t == Technique::relative ? TransferParams::relative() : TransferParams::hybrid();
    return CursorEngine(c);
}

// Holds a pose for `seconds` at 90 Hz starting at t; returns the end time.
TimeUs hold(CursorEngine& e, const PixelPoint& p, TimeUs t, double seconds)
{
    const int n = static_cast<int>(seconds * 90);
    for (int i = 0; i < n; ++i)
        e.handle_event(pose_at(p, t + std::llround(i * 1e6 / 90)));
    return t + std::llround(n * 1e6 / 90);
}

// Relative-mode drag of `dx` metres in 10 steps of 16 ms.
TimeUs drag(CursorEngine& e, TimeUs t, double dx)
{
    e.handle_event(down(t));
    for (int i = 1; i <= 10; ++i)
        e.handle_event(move(t + i * 16000, {dx * i / 10, 0}));
    return t + 10 * 16000;
}

} // namespace

TEST_CASE("technique and mode names")
{
    for (auto t : {Technique::absolute, Technique::relative, Technique::hybrid, Technique::dual_speed})
        CHECK(technique_from_string(to_string(t)) == t);
    CHECK(technique_from_string("dual-speed") == Technique::dual_speed);
    CHECK_THROWS_AS(technique_from_string("laser"), ConfigError);
    for (auto m : {Mode::absolute, Mode::relative, Mode::clutch_wait, Mode::snapping, Mode::slow})
        CHECK(mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(mode_from_string("fast"), ConfigError);
}

TEST_CASE("initial state")
{
    CHECK(make(Technique::absolute).state().position == wall.center_px());
    CHECK(make(Technique::relative).state().mode == Mode::relative);
    CHECK(make(Technique::hybrid).state().mode == Mode::absolute);
    EngineConfig bad;
    bad.options.slow_gain = 0;
    CHECK_THROWS_AS(CursorEngine{bad}, ConfigError);
}

TEST_CASE("absolute: cursor is the clamped filtered intersection")
{
    auto e = make(Technique::absolute);
    FilterState f;
    Rng rng(2);
    PixelPoint target{3000, 2000};
    for (int i = 0; i < 2000; ++i) {
        const TimeUs t = std::llround(i * 1e6 / 90);
        target = target + PixelPoint{rng.normal(0, 200), rng.normal(0, 150)};
        const auto ev = pose_at(target, t);
        const auto hit = intersect(extract_pose(std::get<input::Pose>(ev.payload).pose), wall);
        REQUIRE(hit);
        const auto expected = wall.clamp(filter_step(f, {}, *hit, t));
        const auto out = e.handle_event(ev);
        CHECK(out.cursor == expected);
        CHECK(out.mode == Mode::absolute);
    }
}

TEST_CASE("absolute: pad press clicks at the cursor")
{
    auto e = make(Technique::absolute);
    const TimeUs t = hold(e, {1000, 1000}, 0, 1.0);
    const auto out = e.handle_event(press(t));
    REQUIRE(out.click);
    CHECK(out.click->position == out.cursor);
    CHECK(out.click->t_us == t);
    CHECK_FALSE(e.handle_event({t + 1, input::PadRelease{}}).click);
}

TEST_CASE("absolute: a ray that misses holds the last location")
{
    auto e = make(Technique::absolute);
    const TimeUs t = hold(e, {1000, 1000}, 0, 1.0);
    const PixelPoint before = e.state().position;
    Mat4 backward = Mat4::translation(hand) * Mat4::rotation_y(kPi);
    e.handle_event({t, input::Pose{DevicePose{backward, t}}});
    CHECK(e.state().position == before);
}

TEST_CASE("trigger is unbound unless configured")
{
    auto e = make(Technique::absolute);
    CHECK_FALSE(e.handle_event({0, input::TriggerPress{}}).click);
    EngineConfig c;
    c.options.trigger_clicks = true;
    CursorEngine bound(c);
    CHECK(bound.handle_event({0, input::TriggerPress{}}).click);
    CHECK_FALSE(bound.handle_event({1, input::TriggerRelease{}}).click);
}

TEST_CASE("dual-speed: slow mode moves three tenths")
{
    auto e = make(Technique::dual_speed);
    TimeUs t = hold(e, {3000, 2000}, 0, 20.0);
    e.handle_event(down(t));
    CHECK(e.state().mode == Mode::slow);
    const PixelPoint start = e.state().position;
    t = hold(e, {3100, 2000}, t + 1, 30.0);
    CHECK(e.state().position.x - start.x == doctest::Approx(30.0).epsilon(1e-3));
    CHECK(e.state().position.y - start.y == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("dual-speed: ratio is exact on every pose")
{
    auto e = make(Technique::dual_speed);
    Rng rng(4);
    TimeUs t = hold(e, {3855, 2175}, 0, 2.0);
    e.handle_event(down(t));
    const PixelPoint c0 = e.state().position, a0 = e.state().absolute;
    PixelPoint aim{3855, 2175};
    for (int i = 1; i < 3000; ++i) {
        aim = aim + PixelPoint{rng.normal(0, 60), rng.normal(0, 60)};
        e.handle_event(pose_at(aim, t + std::llround(i * 1e6 / 90)));
        const auto dc = e.state().position - c0, da = e.state().absolute - a0;
        CHECK(dc.x == doctest::Approx(0.3 * da.x).epsilon(1e-12));
        CHECK(dc.y == doctest::Approx(0.3 * da.y).epsilon(1e-12));
    }
}

TEST_CASE("dual-speed: every touch re-anchors")
{
    auto e = make(Technique::dual_speed);
    TimeUs t = hold(e, {2000, 2000}, 0, 3.0);
    e.handle_event(down(t));
    t = hold(e, {2500, 2000}, t + 1, 3.0);
    e.handle_event(up(t));
    t = hold(e, {2500, 2000}, t + 1, 1.0);
    CHECK(e.state().mode == Mode::absolute);
    e.handle_event(down(t));
    CHECK(e.state().slow_anchor_cursor == e.state().position);
    CHECK(e.state().slow_anchor_absolute == e.state().absolute);
}

TEST_CASE("dual-speed: release snaps back, or jumps when configured")
{
    auto e = make(Technique::dual_speed);
    TimeUs t = hold(e, {2000, 2000}, 0, 3.0);
    e.handle_event(down(t));
    t = hold(e, {3000, 2000}, t + 1, 5.0);
    const auto out = e.handle_event(up(t));
    CHECK(out.mode == Mode::snapping);
    CHECK(out.mode_changed);
    CHECK(e.advance_time(t + ms(300)).mode == Mode::absolute);
    CHECK(e.state().position == wall.clamp(e.state().absolute));

    EngineConfig c;
    c.technique = Technique::dual_speed;
    c.options.dual_speed_release = ReleaseBehavior::instant;
    CursorEngine jump(c);
    t = hold(jump, {2000, 2000}, 0, 3.0);
    jump.handle_event(down(t));
    t = hold(jump, {3000, 2000}, t + 1, 5.0);
    const auto j = jump.handle_event(up(t));
    CHECK(j.mode == Mode::absolute);
    CHECK(j.cursor == wall.clamp(jump.state().absolute));
}

TEST_CASE("hybrid: touching switches to relative and poses stop moving the cursor")
{
    auto e = make(Technique::hybrid);
    TimeUs t = hold(e, {2000, 2000}, 0, 2.0);
    const auto out = e.handle_event(down(t));
    CHECK(out.mode == Mode::relative);
    CHECK(out.mode_changed);
    const PixelPoint p = e.state().position;
    hold(e, {5000, 1000}, t + 1, 1.0);
    CHECK(e.state().position == p);
}

TEST_CASE("hybrid: retouch at 399 ms clutches, 400 ms begins the snap")
{
    auto e = make(Technique::hybrid);
    TimeUs t = hold(e, {2000, 2000}, 0, 2.0);
    t = drag(e, t, 0.02);
    const TimeUs lift = t + 1000;
    e.handle_event(up(lift));
    CHECK(e.state().mode == Mode::clutch_wait);
    CHECK(e.state().clutch_deadline_us == lift + ms(400));

    SUBCASE("399 ms")
    {
        CHECK(e.advance_time(lift + ms(399)).mode == Mode::clutch_wait);
        CHECK(e.handle_event(down(lift + ms(399))).mode == Mode::relative);
    }
    SUBCASE("400 ms")
    {
        const PixelPoint before = e.state().position;
        const auto out = e.advance_time(lift + ms(400));
        CHECK(out.mode == Mode::snapping);
        CHECK(e.state().snap_start_us == lift + ms(400));
        CHECK(out.cursor == before);
    }
    SUBCASE("401 ms")
    {
        // The snap already began at the deadline; touching takes over again.
        e.handle_event(down(lift + ms(401)));
        CHECK(e.state().snap_start_us == lift + ms(400));
        CHECK(e.state().mode == Mode::relative);
    }
}

TEST_CASE("hybrid: snap reaches the live aim point within 300 ms")
{
    auto e = make(Technique::hybrid);
    TimeUs t = hold(e, {1000, 2000}, 0, 3.0);
    t = drag(e, t, 0.04);
    const PixelPoint moved = e.state().position;
    CHECK(moved.x - 1000 > 500);
    e.handle_event(up(t));
    const TimeUs start = t + ms(400);
    TimeUs reached = -1;
    for (TimeUs s = start; s <= start + ms(400); s += 1000) {
        const auto out = e.advance_time(s);
        const PixelPoint target = wall.clamp(e.state().absolute);
        if ((out.cursor - target).norm() <= 1.0 && reached < 0)
            reached = s;
    }
    REQUIRE(reached >= 0);
    CHECK(reached - start <= ms(300));
    CHECK(e.state().mode == Mode::absolute);
}

TEST_CASE("snap ends once within a pixel")
{
    EngineConfig c;
    c.technique = Technique::hybrid;
    CursorEngine e(c);
    TimeUs t = hold(e, {2000, 2000}, 0, 3.0);
    t = drag(e, t, 0.0005); // a few pixels away
    const double offset = (e.state().position - wall.clamp(e.state().absolute)).norm();
    REQUIRE(offset > 1.0);
    e.handle_event(up(t));
    const TimeUs start = t + ms(400);
    // Step until the remaining offset drops under 1 px: mode flips that instant.
    for (TimeUs s = start;; s += 500) {
        const auto out = e.advance_time(s);
        if (out.mode == Mode::absolute) {
            CHECK(out.cursor == wall.clamp(e.state().absolute));
            break;
        }
        REQUIRE(s < start + ms(300));
    }
}

TEST_CASE("advance_time is idempotent")
{
    auto e = make(Technique::hybrid);
    TimeUs t = hold(e, {2000, 2000}, 0, 2.0);
    t = drag(e, t, 0.03);
    e.handle_event(up(t));
    const auto a = e.advance_time(t + ms(450));
    const auto state = e.state();
    const auto b = e.advance_time(t + ms(450));
    CHECK(e.state() == state);
    CHECK(a.cursor == b.cursor);
    CHECK_FALSE(b.mode_changed);
    CHECK_THROWS_AS(e.advance_time(t), OrderingError);
}

TEST_CASE("hybrid: pad press in relative mode leaves the cursor")
{
    auto e = make(Technique::hybrid);
    TimeUs t = hold(e, {2000, 2000}, 0, 2.0);
    t = drag(e, t, 0.02);
    const PixelPoint p = e.state().position;
    const auto out = e.handle_event(press(t + 1));
    REQUIRE(out.click);
    CHECK(out.click->position == p);
    CHECK(out.cursor == p);
}

TEST_CASE("hybrid: relative mode ignores pose streams entirely")
{
    auto run = [](std::uint64_t seed) {
        auto e = make(Technique::hybrid);
        TimeUs t = hold(e, {2000, 2000}, 0, 1.0);
        e.handle_event(down(t));
        Rng rng(seed);
        std::vector<PixelPoint> trace;
        for (int i = 1; i <= 300; ++i) {
            const TimeUs ti = t + i * 11111;
            e.handle_event(pose_at({rng.uniform(0, 7710), rng.uniform(0, 4350)}, ti));
            if (i % 2 == 0)
                e.handle_event(move(ti, {0.0001 * i, 0.00005 * i}));
            trace.push_back(e.state().position);
        }
        return trace;
    };
    CHECK(run(1) == run(2));
}

TEST_CASE("relative: taps click, drags and long presses do not")
{
    auto e = make(Technique::relative);
    const PixelPoint start = e.state().position;
    e.handle_event(down(0, {0.01, 0.01}));
    const auto tap = e.handle_event(up(ms(100)));
    REQUIRE(tap.click);
    CHECK(tap.click->position == start);

    e.handle_event(down(ms(1000)));
    CHECK_FALSE(e.handle_event(up(ms(1251))).click);

    e.handle_event(down(ms(2000), {0, 0}));
    e.handle_event(move(ms(2050), {0.006, 0}));
    CHECK_FALSE(e.handle_event(up(ms(2100))).click);
}

TEST_CASE("relative: swipes move the cursor through the transfer function")
{
    auto e = make(Technique::relative);
    const PixelPoint start = e.state().position;
    e.handle_event(down(0, {0, 0}));
    const auto out = e.handle_event(move(16000, {0.001, 0}));
    TransferState s;
    displacement(s, TransferParams::relative(), {0, 0}, 0, wall);
    const auto d = displacement(s, TransferParams::relative(), {0.001, 0}, 16000, wall);
    CHECK(out.cursor == start + d);
    // Poses do nothing for the pure relative technique.
    e.handle_event(pose_at({100, 100}, 20000));
    CHECK(e.state().position == out.cursor);
}

TEST_CASE("inconsistent events are ignored")
{
    auto e = make(Technique::relative);
    const auto before = e.state().position;
    CHECK(e.handle_event(move(10, {0.05, 0})).cursor == before);
    CHECK_FALSE(e.handle_event(up(20)).click);
    e.handle_event(down(30));
    e.handle_event(down(40)); // second down while touching
    CHECK(e.state().touch_down_us == 30);
    CHECK_THROWS_AS(e.handle_event(down(10)), OrderingError);
}

TEST_CASE("property: cursor stays on the display")
{
    for (auto tech : {Technique::absolute, Technique::relative, Technique::hybrid, Technique::dual_speed}) {
        auto e = make(tech);
        Rng rng(static_cast<std::uint64_t>(tech) + 10);
        TimeUs t = 0;
        bool touching = false;
        SurfacePoint f{};
        for (int i = 0; i < 20000; ++i) {
            t += 1 + static_cast<TimeUs>(rng.below(20000));
            EngineOutput out;
            switch (rng.below(6)) {
            case 0:
            case 1:
            case 2:
                out = e.handle_event(pose_at({rng.uniform(-8000, 16000), rng.uniform(-5000, 9000)}, t));
                break;
            case 3:
                touching = !touching;
                out = e.handle_event(touching ? down(t, f) : up(t));
                break;
            case 4:
                f = {f.x + rng.normal(0, 0.02), f.y + rng.normal(0, 0.02)};
                out = e.handle_event(move(t, f));
                break;
            default:
                out = e.handle_event(press(t));
                if (out.click)
                    CHECK(out.click->position == out.cursor);
            }
            CHECK(wall.contains(out.cursor));
        }
    }
}

TEST_CASE("property: identical streams give identical outputs")
{
    auto run = [] {
        auto e = make(Technique::hybrid);
        Rng rng(99);
        std::vector<EngineOutput> outs;
        TimeUs t = 0;
        for (int i = 0; i < 5000; ++i) {
            t += 5000 + static_cast<TimeUs>(rng.below(10000));
            const auto k = rng.below(4);
            if (k < 2)
                outs.push_back(e.handle_event(pose_at({rng.uniform(0, 7710), rng.uniform(0, 4350)}, t)));
            else if (k == 2)
                outs.push_back(e.handle_event(e.state().touch_active ? up(t) : down(t)));
            else
                outs.push_back(e.handle_event(move(t, {rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)})));
        }
        return outs;
    };
    CHECK(run() == run());
}
