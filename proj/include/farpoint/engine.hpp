#pragma once

#include "farpoint/filtering.hpp"
#include "farpoint/geometry.hpp"
#include "farpoint/transfer.hpp"

#include <optional>
#include <string_view>
#include <variant>

namespace farpoint {

enum class Technique { absolute, relative, hybrid, dual_speed };

std::string_view to_string(Technique t);
// Throws ConfigError on an unknown name.
Technique technique_from_string(std::string_view name);

// Sub-mode of the running technique.
//   absolute    cursor follows the filtered aim point
//   relative    cursor follows finger motion through the transfer function
//   clutch_wait hybrid only: finger lifted, waiting out the clutch window
//   snapping    animating from the current cursor back to the aim point
//   slow        dual-speed only: aim motion scaled down around the anchors
enum class Mode { absolute, relative, clutch_wait, snapping, slow };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

namespace input {
struct Pose {
    DevicePose pose;
};
struct TouchDown {
    SurfacePoint at;
};
struct TouchMove {
    SurfacePoint at;
};
struct TouchUp {};
struct PadPress {};
struct PadRelease {};
struct TriggerPress {};
struct TriggerRelease {};
} // namespace input

struct InputEvent {
    TimeUs t_us = 0;
    std::variant<input::Pose, input::TouchDown, input::TouchMove, input::TouchUp, input::PadPress,
                 input::PadRelease, input::TriggerPress, input::TriggerRelease>
        payload;
};

enum class ReleaseBehavior { snap, instant };

struct TechniqueOptions {
    double clutch_ms = 400.0;
    double snap_time_constant_ms = 60.0;
    double snap_max_ms = 300.0; // the animation is tapered to end by then
    double snap_done_px = 1.0;
    double slow_gain = 0.3;
    ReleaseBehavior dual_speed_release = ReleaseBehavior::snap;
    double tap_max_ms = 250.0;
    double tap_slop_m = 0.005;
    bool trigger_clicks = false;

    friend bool operator==(const TechniqueOptions&, const TechniqueOptions&) = default;

    void validate() const;
};

struct EngineConfig {
    Technique technique = Technique::absolute;
    DisplayPlane display = DisplayPlane::tiled_wall();
    FilterParams filter;
    TransferParams transfer; // the one matching `technique`
    TechniqueOptions options;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;

    void validate() const;
};

struct CursorState {
    Technique technique = Technique::absolute;
    Mode mode = Mode::absolute;
    PixelPoint position;

    // Filtered, unclamped aim point; meaningless until has_absolute.
    PixelPoint absolute;
    bool has_absolute = false;

    PixelPoint slow_anchor_cursor;
    PixelPoint slow_anchor_absolute;

    TimeUs clutch_deadline_us = 0;
    TimeUs snap_start_us = 0;
    PixelPoint snap_offset; // cursor minus target when the snap began

    bool touch_active = false;
    TimeUs touch_down_us = 0;
    SurfacePoint touch_last;
    double touch_travel_m = 0.0;

    FilterState filter_state;
    TransferState transfer_state;
    TimeUs last_t_us = 0;

    friend bool operator==(const CursorState&, const CursorState&) = default;
};

struct Click {
    PixelPoint position;
    TimeUs t_us = 0;

    friend bool operator==(const Click&, const Click&) = default;
};

struct EngineOutput {
    PixelPoint cursor;
    Mode mode = Mode::absolute;
    std::optional<Click> click;
    bool mode_changed = false;

    friend bool operator==(const EngineOutput&, const EngineOutput&) = default;
};

// Cursor engine for one session. Events must arrive in timestamp order.
class CursorEngine {
public:
    explicit CursorEngine(EngineConfig config);

    // Advances time to the event, then applies it. Throws OrderingError if
    // the event predates the last processed time.
    EngineOutput handle_event(const InputEvent& event);

    // Fires clutch deadlines and advances the snap animation.
    EngineOutput advance_time(TimeUs t_us);

    const CursorState& state() const { return state_; }
    const EngineConfig& config() const { return config_; }

private:
    void advance(TimeUs t);
    EngineOutput emit(std::optional<Click> click);
    void on_pose(const DevicePose& pose, TimeUs t);
    void on_touch_down(const SurfacePoint& at, TimeUs t);
    void on_touch_move(const SurfacePoint& at, TimeUs t);
    void on_touch_up(TimeUs t, std::optional<Click>& click);

    void begin_snap(TimeUs start);
    void update_snap(TimeUs now);
    PixelPoint snap_target() const;
    void set_mode(Mode m);

    EngineConfig config_;
    CursorState state_;
    bool mode_changed_ = false;
};

} // namespace farpoint
