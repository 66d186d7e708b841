#include "farpoint/engine.hpp"

#include "farpoint/error.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <string>

namespace farpoint {

namespace {

constexpr std::array<std::string_view, 4> kTechniqueNames{"absolute", "relative", "hybrid", "dual_speed"};
constexpr std::array<std::string_view, 5> kModeNames{"absolute", "relative", "clutch_wait", "snapping", "slow"};

TimeUs ms_to_us(double ms) { return static_cast<TimeUs>(std::llround(ms * 1000.0)); }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

std::string_view to_string(Technique t) { return kTechniqueNames[static_cast<std::size_t>(t)]; }

Technique technique_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kTechniqueNames.size(); ++i)
        if (kTechniqueNames[i] == name)
            return static_cast<Technique>(i);
    if (name == "dual-speed")
        return Technique::dual_speed;
    throw ConfigError("unknown technique '" + std::string(name) + "'");
}

std::string_view to_string(Mode m) { return kModeNames[static_cast<std::size_t>(m)]; }

Mode mode_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kModeNames.size(); ++i)
        if (kModeNames[i] == name)
            return static_cast<Mode>(i);
    throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void TechniqueOptions::validate() const
{
    if (clutch_ms < 0.0 || snap_max_ms < 0.0 || !(snap_time_constant_ms > 0.0) || snap_done_px < 0.0)
        throw ConfigError("technique: clutch/snap timings must be non-negative");
    if (!(slow_gain > 0.0))
        throw ConfigError("technique: slow_gain must be positive");
    if (tap_max_ms < 0.0 || tap_slop_m < 0.0)
        throw ConfigError("technique: tap thresholds must be non-negative");
}

void EngineConfig::validate() const
{
    display.validate();
    filter.validate();
    transfer.validate();
    options.validate();
}

CursorEngine::CursorEngine(EngineConfig config) : config_(std::move(config))
{
    config_.validate();
    state_.technique = config_.technique;
    state_.mode = config_.technique == Technique::relative ? Mode::relative : Mode::absolute;
    state_.position = config_.display.center_px();
}

void CursorEngine::set_mode(Mode m)
{
    if (state_.mode != m) {
        state_.mode = m;
        mode_changed_ = true;
    }
}

PixelPoint CursorEngine::snap_target() const
{
    return state_.has_absolute ? config_.display.clamp(state_.absolute) : state_.position;
}

void CursorEngine::begin_snap(TimeUs start)
{
    state_.snap_start_us = start;
    state_.snap_offset = state_.position - snap_target();
    set_mode(Mode::snapping);
    update_snap(start);
}

void CursorEngine::update_snap(TimeUs now)
{
    const auto& opt = config_.options;
    const PixelPoint target = snap_target();
    const double elapsed_ms = static_cast<double>(now - state_.snap_start_us) * 1e-3;

    // Exponential approach, tapered so the remaining offset reaches zero
    // exactly at snap_max_ms.
    double weight = 0.0;
    if (elapsed_ms < opt.snap_max_ms) {
        const double tail = std::exp(-opt.snap_max_ms / opt.snap_time_constant_ms);
        weight = (std::exp(-elapsed_ms / opt.snap_time_constant_ms) - tail) / (1.0 - tail);
    }
    const PixelPoint offset = state_.snap_offset * weight;
    if (offset.norm() <= opt.snap_done_px) {
        state_.position = target;
        set_mode(Mode::absolute);
        return;
    }
    state_.position = config_.display.clamp(target + offset);
}

void CursorEngine::advance(TimeUs t)
{
    if (t < state_.last_t_us)
        throw OrderingError("engine time " + std::to_string(t) + " us precedes " + std::to_string(state_.last_t_us) +
                            " us");
    if (state_.mode == Mode::clutch_wait && t >= state_.clutch_deadline_us)
        begin_snap(state_.clutch_deadline_us);
    if (state_.mode == Mode::snapping)
        update_snap(t);
    state_.last_t_us = t;
}

EngineOutput CursorEngine::emit(std::optional<Click> click)
{
    EngineOutput out{state_.position, state_.mode, click, mode_changed_};
    mode_changed_ = false;
    return out;
}

EngineOutput CursorEngine::advance_time(TimeUs t)
{
    advance(t);
    return emit(std::nullopt);
}

void CursorEngine::on_pose(const DevicePose& pose, TimeUs t)
{
    if (config_.technique == Technique::relative)
        return;

    const auto hit = intersect(extract_pose(pose), config_.display);
    if (hit) {
        if (state_.filter_state.initialized && t <= state_.filter_state.last_t_us) {
            spdlog::debug("engine: pose at {} us repeats a filter timestamp, skipped", t);
        } else {
            state_.absolute = filter_step(state_.filter_state, config_.filter, *hit, t);
            state_.has_absolute = true;
        }
    }
    if (!state_.has_absolute)
        return;

    switch (state_.mode) {
    case Mode::absolute:
        state_.position = config_.display.clamp(state_.absolute);
        break;
    case Mode::slow:
        state_.position = config_.display.clamp(
            state_.slow_anchor_cursor + (state_.absolute - state_.slow_anchor_absolute) * config_.options.slow_gain);
        break;
    case Mode::snapping:
        update_snap(t);
        break;
    case Mode::relative:
    case Mode::clutch_wait:
        break;
    }
}

void CursorEngine::on_touch_down(const SurfacePoint& at, TimeUs t)
{
    if (state_.touch_active) {
        spdlog::debug("engine: touch down at {} us while already touching, ignored", t);
        return;
    }
    state_.touch_active = true;
    state_.touch_down_us = t;
    state_.touch_last = at;
    state_.touch_travel_m = 0.0;

    switch (config_.technique) {
    case Technique::relative:
        displacement(state_.transfer_state, config_.transfer, at, t, config_.display);
        break;
    case Technique::hybrid:
        set_mode(Mode::relative);
        displacement(state_.transfer_state, config_.transfer, at, t, config_.display);
        break;
    case Technique::dual_speed:
        state_.slow_anchor_cursor = state_.position;
        state_.slow_anchor_absolute = state_.has_absolute ? state_.absolute : state_.position;
        set_mode(Mode::slow);
        break;
    case Technique::absolute:
        break;
    }
}

void CursorEngine::on_touch_move(const SurfacePoint& at, TimeUs t)
{
    if (!state_.touch_active) {
        spdlog::debug("engine: touch move at {} us without an active touch, ignored", t);
        return;
    }
    state_.touch_travel_m += std::hypot(at.x - state_.touch_last.x, at.y - state_.touch_last.y);
    state_.touch_last = at;

    const bool moves_cursor = config_.technique == Technique::relative ||
                              (config_.technique == Technique::hybrid && state_.mode == Mode::relative);
    if (!moves_cursor)
        return;
    const PixelPoint delta = displacement(state_.transfer_state, config_.transfer, at, t, config_.display);
    state_.position = config_.display.clamp(state_.position + delta);
}

void CursorEngine::on_touch_up(TimeUs t, std::optional<Click>& click)
{
    if (!state_.touch_active) {
        spdlog::debug("engine: touch up at {} us without an active touch, ignored", t);
        return;
    }
    state_.touch_active = false;
    end_stroke(state_.transfer_state);
    const auto& opt = config_.options;

    switch (config_.technique) {
    case Technique::relative:
        if (t - state_.touch_down_us <= ms_to_us(opt.tap_max_ms) && state_.touch_travel_m < opt.tap_slop_m)
            click = Click{state_.position, t};
        break;
    case Technique::hybrid:
        if (state_.mode == Mode::relative) {
            state_.clutch_deadline_us = t + ms_to_us(opt.clutch_ms);
            set_mode(Mode::clutch_wait);
            if (opt.clutch_ms <= 0.0)
                begin_snap(t);
        }
        break;
    case Technique::dual_speed:
        if (state_.mode == Mode::slow) {
            if (opt.dual_speed_release == ReleaseBehavior::instant) {
                state_.position = snap_target();
                set_mode(Mode::absolute);
            } else {
                begin_snap(t);
            }
        }
        break;
    case Technique::absolute:
        break;
    }
}

EngineOutput CursorEngine::handle_event(const InputEvent& event)
{
    const TimeUs t = event.t_us;
    advance(t);
    std::optional<Click> click;

    std::visit(overloaded{
                   [&](const input::Pose& p) { on_pose(p.pose, t); },
                   [&](const input::TouchDown& d) { on_touch_down(d.at, t); },
                   [&](const input::TouchMove& m) { on_touch_move(m.at, t); },
                   [&](const input::TouchUp&) { on_touch_up(t, click); },
                   [&](const input::PadPress&) { click = Click{state_.position, t}; },
                   [&](const input::PadRelease&) {},
                   [&](const input::TriggerPress&) {
                       if (config_.options.trigger_clicks)
                           click = Click{state_.position, t};
                   },
                   [&](const input::TriggerRelease&) {},
               },
               event.payload);

    return emit(click);
}

} // namespace farpoint
