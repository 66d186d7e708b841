#pragma once

#include "farpoint/experiment.hpp"
#include "farpoint/geometry.hpp"
#include "farpoint/random.hpp"
#include "farpoint/session.hpp"
#include "farpoint/session_log.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace farpoint {

// Synthetic pointer user. Angles are degrees of aim rotation.
struct HumanModel {
    // Physiological tremor: five in-band sinusoids plus white noise.
    std::array<double, 2> tremor_freq_band_hz{8.0, 12.0};
    double tremor_rms_deg = 0.10;
    double tremor_white_fraction = 0.10; // white-noise sd relative to tremor_rms

    // Slow postural sway of the arm, also a sum of sinusoids.
    std::array<double, 2> sway_freq_band_hz{0.2, 1.0};
    double sway_rms_deg = 0.12;

    // Pressing the pad jolts the controller sideways from the aim; the jolt
    // begins when the thumb starts pushing, press_lead_ms before the click.
    double click_shake_peak_deg = 0.30;
    double click_shake_decay_ms = 60.0;
    double press_lead_ms = 40.0;
    double press_hold_ms = 90.0;

    // Aimed movements: duration = move_a_ms + move_b_ms * log2(D/W + 1),
    // endpoint sd = endpoint_noise_fraction * D + endpoint_noise_floor_deg.
    double move_a_ms = 120.0;
    double move_b_ms = 90.0;
    double endpoint_noise_fraction = 0.06;
    double endpoint_noise_floor_deg = 0.08;

    // Finger strokes on the touch surfaces.
    double swipe_a_ms = 180.0;
    double swipe_b_ms = 60.0;
    double swipe_noise_fraction = 0.08;
    double swipe_noise_floor_m = 0.0002;
    double tap_ms = 80.0;
    double reposition_ms = 150.0;

    // Perception and decisions.
    double reaction_overhead_ms = 200.0;
    double perception_delay_ms = 80.0;
    double dwell_before_click_ms = 150.0;
    double click_margin_px = 2.0;
    double settle_speed_px_s = 40.0;  // cursor slower than this counts as settled
    double min_watch_ms = 200.0;      // before judging a correction
    double max_watch_ms = 900.0;      // corrects anyway after this long
    double patience_ms = 4000.0;      // after this on one target, clicks whenever inside
    double correction_lead_ms = 250.0; // extrapolates cursor drift this far

    std::uint64_t rng_seed = 1;

    friend bool operator==(const HumanModel&, const HumanModel&) = default;

    void validate() const;
};

struct SimScenario {
    SessionConfig session;
    HumanModel human;
    Vec3 stand_position{0.0, 1.155, 2.0}; // hand position, metres
    double pose_rate_hz = 90.0;
    double touch_rate_hz = 60.0;
    double pad_radius_m = 0.018;    // controller trackpad
    double tablet_half_m = 0.10;    // touch tablet used for relative pointing
    double max_set_seconds = 120.0; // ScenarioError beyond this

    friend bool operator==(const SimScenario&, const SimScenario&) = default;

    // Throws ScenarioError (or ConfigError) on an unusable scenario.
    void validate() const;
};

// Aim noise sampled at one pose.
struct TruthSample {
    TimeUs t_us = 0;
    std::array<double, 2> intended_deg{}; // yaw, pitch without noise
    std::array<double, 2> noise_deg{};    // tremor + sway + shake
};

struct SimOptions {
    bool record_messages = true; // fill SimResult::log
    bool record_truth = false;
};

struct SimResult {
    SessionLog log; // config header, accepted inputs and all outputs
    std::vector<TruthSample> truth;
    std::vector<SetRecord> formal;
    std::vector<SetRecord> practice;
    std::vector<Technique> technique_order;
    SessionCounters counters;
    TimeUs end_us = 0;
};

// Runs the scenario's study closed-loop against an in-process session.
// Deterministic in (scenario, options). Throws ScenarioError if a target
// is off-display or a set stalls.
SimResult simulate_run(const SimScenario& scenario, SimOptions options = {});

// Band-limited noise: `count` sinusoids with random in-band frequencies and
// phases, scaled to `rms`, plus white noise of sd white_fraction * rms drawn
// per sample.
class BandNoise {
public:
    BandNoise(Rng& rng, double low_hz, double high_hz, double rms, double white_fraction, int count = 5);

    // Deterministic part at time t.
    double smooth(double t_s) const;
    // One sample including a fresh white-noise draw.
    double sample(double t_s, Rng& rng) const;

    struct Component {
        double freq_hz;
        double amplitude;
        double phase;
    };
    const std::vector<Component>& components() const { return parts_; }

private:
    std::vector<Component> parts_;
    double white_sd_ = 0.0;
};

// Decaying jolt: peak * exp(-(t - onset) / decay) after onset, zero before.
double shake_offset(double peak, double decay_ms, double since_onset_ms);

// Pose of a hand at `origin` aiming at yaw/pitch given in degrees.
DevicePose aim_pose_deg(const Vec3& origin, double yaw_deg, double pitch_deg, TimeUs t_us);

// Yaw/pitch in degrees aiming from `origin` at a display pixel.
std::array<double, 2> aim_at_pixel(const Vec3& origin, const DisplayPlane& display, const PixelPoint& p);

} // namespace farpoint
