#include "farpoint/simulator.hpp"

#include "farpoint/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace farpoint {

void HumanModel::validate() const
{
    auto band_ok = [](const std::array<double, 2>& b) { return b[0] > 0.0 && b[0] < b[1]; };
    if (!band_ok(tremor_freq_band_hz) || !band_ok(sway_freq_band_hz))
        throw ConfigError("human: frequency bands need 0 < low < high");
    for (double v : {tremor_rms_deg, tremor_white_fraction, sway_rms_deg, click_shake_peak_deg, press_lead_ms,
                     press_hold_ms, move_a_ms, move_b_ms, endpoint_noise_fraction, endpoint_noise_floor_deg,
                     swipe_a_ms, swipe_b_ms, swipe_noise_fraction, swipe_noise_floor_m, tap_ms, reposition_ms,
                     reaction_overhead_ms, perception_delay_ms, dwell_before_click_ms, click_margin_px,
                     settle_speed_px_s, min_watch_ms, max_watch_ms, patience_ms, correction_lead_ms})
        if (!(v >= 0.0))
            throw ConfigError("human: magnitudes and durations must be non-negative");
    if (!(click_shake_decay_ms > 0.0))
        throw ConfigError("human: click_shake_decay_ms must be positive");
}

void SimScenario::validate() const
{
    human.validate();
    if (!(pose_rate_hz > 0.0) || !(touch_rate_hz > 0.0))
        throw ScenarioError("scenario: sample rates must be positive");
    if (!(pad_radius_m > 0.0) || !(tablet_half_m > 0.0) || !(max_set_seconds > 0.0))
        throw ScenarioError("scenario: surface sizes and the set time limit must be positive");
    if (!session.study)
        throw ScenarioError("scenario: a study design is required");
    const auto& d = *session.study;
    d.validate();
    try {
        for (double w : d.widths_px)
            for (double a : d.amplitudes_px)
                SetSpec::make(Technique::absolute, w, a, session.display);
        if (d.practice.enabled)
            for (double w : d.practice.widths_px)
                SetSpec::make(Technique::absolute, w, d.practice.amplitude_px, session.display);
    } catch (const DomainError& e) {
        throw ScenarioError(std::string("scenario: target unreachable: ") + e.what());
    }
}

BandNoise::BandNoise(Rng& rng, double low_hz, double high_hz, double rms, double white_fraction, int count)
{
    double power = 0.0;
    for (int i = 0; i < count; ++i) {
        Component c{rng.uniform(low_hz, high_hz), rng.uniform(0.5, 1.0), rng.uniform(0.0, 2.0 * kPi)};
        power += c.amplitude * c.amplitude / 2.0;
        parts_.push_back(c);
    }
    const double scale = power > 0.0 ? rms / std::sqrt(power) : 0.0;
    for (auto& c : parts_)
        c.amplitude *= scale;
    white_sd_ = white_fraction * rms;
}

double BandNoise::smooth(double t_s) const
{
    double v = 0.0;
    for (const auto& c : parts_)
        v += c.amplitude * std::sin(2.0 * kPi * c.freq_hz * t_s + c.phase);
    return v;
}

double BandNoise::sample(double t_s, Rng& rng) const
{
    const double white = rng.normal();
    return smooth(t_s) + white_sd_ * white;
}

double shake_offset(double peak, double decay_ms, double since_onset_ms)
{
    if (since_onset_ms < 0.0)
        return 0.0;
    return peak * std::exp(-since_onset_ms / decay_ms);
}

DevicePose aim_pose_deg(const Vec3& origin, double yaw_deg, double pitch_deg, TimeUs t_us)
{
    return aim_pose(origin, deg_to_rad(yaw_deg), deg_to_rad(pitch_deg), t_us);
}

std::array<double, 2> aim_at_pixel(const Vec3& origin, const DisplayPlane& display, const PixelPoint& p)
{
    const auto a = aim_angles(origin, display.point_at(p));
    return {rad_to_deg(a[0]), rad_to_deg(a[1])};
}

namespace {

using Angles = std::array<double, 2>;

double min_jerk(double s)
{
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

TimeUs ms(double v) { return static_cast<TimeUs>(std::llround(v * 1000.0)); }

struct AimSegment {
    TimeUs t0 = 0, t1 = 0;
    Angles from{}, to{};

    Angles at(TimeUs t) const
    {
        if (t >= t1 || t1 <= t0)
            return to;
        const double s = min_jerk(static_cast<double>(t - t0) / static_cast<double>(t1 - t0));
        return {from[0] + (to[0] - from[0]) * s, from[1] + (to[1] - from[1]) * s};
    }
};

struct FingerSegment {
    TimeUs t0 = 0, t1 = 0;
    double from = 0.0, to = 0.0; // x on the surface; strokes are horizontal

    double at(TimeUs t) const
    {
        if (t >= t1 || t1 <= t0)
            return to;
        return from + (to - from) * min_jerk(static_cast<double>(t - t0) / static_cast<double>(t1 - t0));
    }
};

struct Shake {
    TimeUs onset = 0;
    double dir_yaw = 0.0, dir_pitch = 0.0;
};

struct Seen {
    TimeUs t = 0;
    PixelPoint p;
    Mode mode = Mode::absolute;
};

enum class TouchKind { down, up };
struct TouchEvent {
    TimeUs t = 0;
    TouchKind kind = TouchKind::down;
};
struct PadEvent {
    TimeUs t = 0;
    bool press = true;
};

enum class Step { idle, react, ballistic, engage, watch, correcting, awaiting, done };

class Run {
public:
    Run(const SimScenario& sc, SimOptions opt)
        : sc_(sc), opt_(opt), h_(sc.human), display_(sc.session.display), noise_rng_(h_.rng_seed),
          motor_rng_(h_.rng_seed ^ 0x9e3779b97f4a7c15ULL),
          tremor_yaw_(noise_rng_, h_.tremor_freq_band_hz[0], h_.tremor_freq_band_hz[1], h_.tremor_rms_deg,
                      h_.tremor_white_fraction),
          tremor_pitch_(noise_rng_, h_.tremor_freq_band_hz[0], h_.tremor_freq_band_hz[1], h_.tremor_rms_deg,
                        h_.tremor_white_fraction),
          sway_yaw_(noise_rng_, h_.sway_freq_band_hz[0], h_.sway_freq_band_hz[1], h_.sway_rms_deg, 0.0),
          sway_pitch_(noise_rng_, h_.sway_freq_band_hz[0], h_.sway_freq_band_hz[1], h_.sway_rms_deg, 0.0),
          session_(sc.session, log_sink())
    {
        result_.log.config = sc.session;
        session_.attach_consumer([this](const WireMessage& m) { observe(m); });
        const Angles centre = aim_at_pixel(sc_.stand_position, display_, display_.center_px());
        aim_ = {0, 0, centre, centre};
    }

    SimResult run()
    {
        session_.start();
        std::int64_t pose_i = 0, touch_i = 0;
        while (step_ != Step::done) {
            const TimeUs tp = static_cast<TimeUs>(std::llround(static_cast<double>(pose_i) * 1e6 / sc_.pose_rate_hz));
            const TimeUs tt =
                static_cast<TimeUs>(std::llround(static_cast<double>(touch_i) * 1e6 / sc_.touch_rate_hz));
            const TimeUs t = std::min(tp, tt);
            now_ = t;
            if (set_started_ >= 0 && t - set_started_ > ms(sc_.max_set_seconds * 1000.0))
                throw ScenarioError("set " + std::to_string(set_index_) + " did not complete within " +
                                    std::to_string(sc_.max_set_seconds) + " s");
            think(t);
            if (tp == t) {
                send_pose(t);
                ++pose_i;
            }
            if (tt == t) {
                send_touch(t);
                ++touch_i;
            }
        }
        if (const auto* study = session_.study()) {
            result_.formal = study->formal_records();
            result_.practice = study->practice_records();
            result_.technique_order = study->technique_order();
        }
        result_.counters = session_.info().counters;
        result_.end_us = now_;
        return std::move(result_);
    }

private:
    Session::LogSink log_sink()
    {
        if (!opt_.record_messages)
            return {};
        return [this](LogDirection dir, const WireMessage& m) { result_.log.records.push_back({dir, m}); };
    }

    // ---- producer side -------------------------------------------------

    void send(MessageBody body, TimeUs t)
    {
        WireMessage m;
        m.session = sc_.session.session_id;
        m.seq = ++seq_;
        m.t_us = t;
        m.body = std::move(body);
        session_.submit(std::move(m));
    }

    Angles noise_at(TimeUs t)
    {
        const double ts = static_cast<double>(t) * 1e-6;
        Angles n{tremor_yaw_.sample(ts, noise_rng_) + sway_yaw_.smooth(ts),
                 tremor_pitch_.sample(ts, noise_rng_) + sway_pitch_.smooth(ts)};
        std::erase_if(shakes_, [&](const Shake& s) {
            return static_cast<double>(t - s.onset) > 20.0 * h_.click_shake_decay_ms * 1000.0;
        });
        for (const auto& s : shakes_) {
            const double k = shake_offset(h_.click_shake_peak_deg, h_.click_shake_decay_ms,
                                          static_cast<double>(t - s.onset) * 1e-3);
            n[0] += k * s.dir_yaw;
            n[1] += k * s.dir_pitch;
        }
        return n;
    }

    void send_pose(TimeUs t)
    {
        const Angles intended = aim_.at(t);
        const Angles n = noise_at(t);
        if (opt_.record_truth)
            result_.truth.push_back({t, intended, n});
        PoseBody body;
        body.matrix = aim_pose_deg(sc_.stand_position, intended[0] + n[0], intended[1] + n[1], t).matrix;
        if (touching_)
            body.buttons |= button_bits::pad_touch;
        if (pad_down_)
            body.buttons |= button_bits::pad_press;
        send(body, t);
        while (!pad_events_.empty() && pad_events_.front().t <= t && step_ != Step::done) {
            const bool press = pad_events_.front().press;
            pad_events_.pop_front();
            pad_down_ = press;
            send(ButtonBody{ButtonName::pad, press ? ButtonEdge::press : ButtonEdge::release}, t);
        }
    }

    void send_touch(TimeUs t)
    {
        while (!touch_events_.empty() && touch_events_.front().t <= t && step_ != Step::done) {
            const auto kind = touch_events_.front().kind;
            touch_events_.pop_front();
            if (kind == TouchKind::down) {
                touching_ = true;
                last_sent_finger_ = finger_.at(t);
                send(TouchBody{TouchPhase::down, {last_sent_finger_, 0.0}}, t);
            } else {
                touching_ = false;
                send(TouchBody{TouchPhase::up, {finger_.at(t), 0.0}}, t);
            }
        }
        if (touching_ && step_ != Step::done) {
            const double x = finger_.at(t);
            if (x != last_sent_finger_) {
                last_sent_finger_ = x;
                send(TouchBody{TouchPhase::move, {x, 0.0}}, t);
            }
        }
    }

    // ---- what the user sees ---------------------------------------------

    void observe(const WireMessage& m)
    {
        if (const auto* c = std::get_if<CursorBody>(&m.body)) {
            seen_.push_back({m.t_us, c->position, c->mode});
            while (seen_.size() > 2 && seen_[1].t < m.t_us - ms(1500))
                seen_.pop_front();
        } else if (const auto* s = std::get_if<StimulusBody>(&m.body)) {
            stimulus_ = *s;
            new_stimulus_ = true;
        } else if (const auto* r = std::get_if<ClickResultBody>(&m.body)) {
            result_hit_ = r->hit;
            have_result_ = true;
        } else if (const auto* ctl = std::get_if<SessionControlBody>(&m.body)) {
            if (ctl->action == "study_complete")
                step_ = Step::done;
        }
    }

    const Seen& seen_at(TimeUs t) const
    {
        for (auto it = seen_.rbegin(); it != seen_.rend(); ++it)
            if (it->t <= t)
                return *it;
        return seen_.front();
    }

    // Cursor and its velocity (px/s) as perceived now.
    std::pair<Seen, double> perceive(TimeUs t) const
    {
        const TimeUs q = t - ms(h_.perception_delay_ms);
        const Seen& a = seen_at(q);
        const Seen& b = seen_at(q - ms(100.0));
        return {a, (a.p.x - b.p.x) / 0.1};
    }

    // ---- decisions ----------------------------------------------------------

    double target_x() const
    {
        return stimulus_.target == Side::left ? stimulus_.left_center_px : stimulus_.right_center_px;
    }
    double target_y() const { return display_.height_px / 2.0; }
    Technique technique() const { return stimulus_.technique; }
    bool pose_driven() const { return technique() != Technique::relative; }

    double gauss(double sd) { return sd > 0.0 ? motor_rng_.normal(0.0, sd) : 0.0; }

    double movement_ms(double distance_px) const
    {
        return h_.move_a_ms + h_.move_b_ms * std::log2(std::abs(distance_px) / stimulus_.width_px + 1.0);
    }

    void think(TimeUs t)
    {
        if (step_ == Step::done)
            return;
        if (have_result_) {
            have_result_ = false;
            if (result_hit_) {
                if (pending_lift_)
                    schedule_touch({std::max(t, lift_after_hit_), TouchKind::up});
                pending_lift_ = false;
            } else if (step_ == Step::awaiting) {
                enter_watch(t);
            }
        }
        if (new_stimulus_) {
            new_stimulus_ = false;
            if (stimulus_.set_index != set_index_) {
                set_index_ = stimulus_.set_index;
                set_started_ = t;
            }
            if (step_ == Step::awaiting || step_ == Step::idle) {
                target_started_ = t;
                step_ = Step::react;
                busy_until_ = t + ms(h_.reaction_overhead_ms);
            }
        }
        if (step_ == Step::awaiting && t - busy_until_ > ms(1000.0))
            enter_watch(t); // the click went nowhere
        if (t < busy_until_)
            return;

        switch (step_) {
        case Step::react:
            if (pose_driven())
                ballistic(t);
            else
                correct(t);
            break;
        case Step::ballistic:
            if (technique() == Technique::hybrid || technique() == Technique::dual_speed)
                step_ = Step::engage;
            else
                enter_watch(t);
            break;
        case Step::engage:
            engage(t);
            break;
        case Step::correcting:
            enter_watch(t);
            break;
        case Step::watch:
            watch(t);
            break;
        case Step::idle:
        case Step::awaiting:
        case Step::done:
            break;
        }
    }

    void enter_watch(TimeUs t)
    {
        step_ = Step::watch;
        watch_start_ = t;
        inside_since_.reset();
    }

    Angles aim_for(double x) const { return aim_at_pixel(sc_.stand_position, display_, {x, target_y()}); }

    void move_aim(TimeUs t, Angles goal, double duration_ms)
    {
        const Angles from = aim_.at(t);
        aim_ = {t, t + ms(duration_ms), from, goal};
        busy_until_ = aim_.t1;
    }

    void ballistic(TimeUs t)
    {
        const Angles from = aim_.at(t);
        Angles goal = aim_for(target_x());
        const double dist = std::hypot(goal[0] - from[0], goal[1] - from[1]);
        const double sd = h_.endpoint_noise_fraction * dist + h_.endpoint_noise_floor_deg;
        goal[0] += gauss(sd);
        goal[1] += gauss(sd * 0.5);
        const PixelPoint here = aimed_pixel(from);
        move_aim(t, goal, movement_ms(target_x() - here.x));
        step_ = Step::ballistic;
    }

    PixelPoint aimed_pixel(const Angles& a) const
    {
        const auto hit = intersect(extract_pose(aim_pose_deg(sc_.stand_position, a[0], a[1], 0)), display_);
        return hit ? *hit : display_.center_px();
    }

    void engage(TimeUs t)
    {
        // Wait until the cursor is back under absolute control before touching.
        const auto [seen, v] = perceive(t);
        if (seen.mode != Mode::absolute || std::abs(v) > 4.0 * h_.settle_speed_px_s + 200.0)
            return;
        finger_ = {t, t, 0.0, 0.0};
        schedule_touch({t, TouchKind::down});
        busy_until_ = t + ms(60.0);
        step_ = Step::correcting;
    }

    void watch(TimeUs t)
    {
        const auto [seen, v] = perceive(t);
        const double half = stimulus_.width_px / 2.0 - std::min(h_.click_margin_px, stimulus_.width_px / 4.0);
        // Where the cursor will be when the button goes down.
        const double ahead = seen.p.x + v * (h_.perception_delay_ms + h_.press_lead_ms) * 1e-3;
        const bool impatient = t - target_started_ >= ms(h_.patience_ms);
        if (std::abs(seen.p.x - target_x()) <= half && (impatient || std::abs(ahead - target_x()) <= half)) {
            if (!inside_since_)
                inside_since_ = t;
            if (impatient || t - *inside_since_ >= ms(h_.dwell_before_click_ms))
                press(t);
            return;
        }
        inside_since_.reset();
        const TimeUs watched = t - watch_start_;
        if (watched >= ms(h_.min_watch_ms) &&
            (std::abs(v) < h_.settle_speed_px_s || watched >= ms(h_.max_watch_ms)))
            correct(t);
    }

    void correct(TimeUs t)
    {
        const auto [seen, v] = perceive(t);
        const bool filtered = technique() == Technique::absolute || technique() == Technique::dual_speed;
        const double lead = filtered ? v * h_.correction_lead_ms * 1e-3 : 0.0;
        const double predicted = std::clamp(seen.p.x + lead, 0.0, static_cast<double>(display_.width_px));
        const double error_px = target_x() - predicted;

        switch (technique()) {
        case Technique::absolute:
        case Technique::dual_speed: {
            const double gain =
                technique() == Technique::dual_speed && seen.mode == Mode::slow ? sc_.session.options.slow_gain : 1.0;
            // Plan in aim space: the aim point must travel error/gain pixels.
            const Angles from = aim_.at(t);
            Angles goal = aim_for(aimed_pixel(from).x + error_px / gain);
            const double sd =
                h_.endpoint_noise_fraction * std::hypot(goal[0] - from[0], goal[1] - from[1]) + h_.endpoint_noise_floor_deg;
            goal[0] += gauss(sd);
            goal[1] += gauss(sd * 0.5);
            move_aim(t, goal, movement_ms(error_px));
            break;
        }
        case Technique::hybrid:
        case Technique::relative:
            swipe(t, error_px);
            break;
        }
        step_ = Step::correcting;
    }

    // Cursor travel the user expects from a stroke of `dist` metres lasting
    // duration_ms, sampled like the touch surface samples it.
    double predict_px(double dist, double duration_ms, const TransferParams& tp) const
    {
        const double dt = 1.0 / sc_.touch_rate_hz;
        const int n = std::max(1, static_cast<int>(std::ceil(duration_ms * 1e-3 / dt)));
        double total = 0.0, prev = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double cur = dist * min_jerk(static_cast<double>(i) / n);
            const double step = cur - prev;
            total += cd_gain(tp, step / dt) * step;
            prev = cur;
        }
        return total * display_.px_per_m_x();
    }

    void swipe(TimeUs t, double error_px)
    {
        const bool tablet = technique() == Technique::relative;
        const TransferParams& tp = tablet ? sc_.session.relative_transfer : sc_.session.hybrid_transfer;
        const double range = tablet ? sc_.tablet_half_m : sc_.pad_radius_m;
        const double sign = error_px >= 0.0 ? 1.0 : -1.0;
        const double duration =
            std::max(h_.swipe_a_ms + h_.swipe_b_ms * std::log2(std::abs(error_px) / stimulus_.width_px + 1.0),
                     sc_.session.options.tap_max_ms + 70.0);

        TimeUs start = t;
        double x0 = finger_.at(t);
        if (tablet) {
            // Each stroke is a fresh touch on the tablet, from the far side.
            x0 = -sign * 0.5 * range;
        } else if (!touching_ || sign * x0 > 0.0) {
            // Lift and re-place the thumb on the far side of the pad.
            if (touching_)
                schedule_touch({t, TouchKind::up});
            start = t + ms(h_.reposition_ms);
            x0 = -sign * 0.7 * range;
        }
        const double room = range - sign * x0;

        double lo = 0.0, hi = room;
        if (predict_px(hi * sign, duration, tp) * sign <= std::abs(error_px)) {
            lo = hi;
        } else {
            for (int i = 0; i < 50; ++i) {
                const double mid = 0.5 * (lo + hi);
                (predict_px(mid * sign, duration, tp) * sign < std::abs(error_px) ? lo : hi) = mid;
            }
        }
        double dist = lo * (1.0 + gauss(h_.swipe_noise_fraction)) + gauss(h_.swipe_noise_floor_m);
        dist = std::clamp(dist, 0.0, room);

        finger_ = {start, start + ms(duration), x0, x0 + sign * dist};
        if (tablet || start != t)
            schedule_touch({start, TouchKind::down});
        busy_until_ = finger_.t1 + ms(30.0);
        if (tablet)
            schedule_touch({busy_until_, TouchKind::up});
        busy_until_ += ms(20.0);
    }

    void press(TimeUs t)
    {
        step_ = Step::awaiting;
        have_result_ = false;
        if (technique() == Technique::relative) {
            finger_ = {t, t, 0.0, 0.0};
            schedule_touch({t, TouchKind::down});
            schedule_touch({t + ms(h_.tap_ms), TouchKind::up});
            busy_until_ = t + ms(h_.tap_ms);
            return;
        }
        const double theta = motor_rng_.uniform(0.0, 2.0 * kPi);
        shakes_.push_back({t, std::cos(theta), std::sin(theta)});
        const TimeUs click = t + ms(h_.press_lead_ms);
        pad_events_.push_back({click, true});
        pad_events_.push_back({click + ms(h_.press_hold_ms), false});
        busy_until_ = click;
        lift_after_hit_ = click + ms(h_.press_hold_ms);
        pending_lift_ = technique() == Technique::hybrid || technique() == Technique::dual_speed;
    }

    void schedule_touch(TouchEvent e)
    {
        const auto at = std::upper_bound(touch_events_.begin(), touch_events_.end(), e.t,
                                         [](TimeUs t, const TouchEvent& x) { return t < x.t; });
        touch_events_.insert(at, e);
    }

    const SimScenario& sc_;
    SimOptions opt_;
    const HumanModel& h_;
    DisplayPlane display_;
    Rng noise_rng_;
    Rng motor_rng_;
    BandNoise tremor_yaw_, tremor_pitch_, sway_yaw_, sway_pitch_;
    SimResult result_;
    Session session_;

    std::uint64_t seq_ = 0;
    TimeUs now_ = 0;
    AimSegment aim_;
    FingerSegment finger_;
    double last_sent_finger_ = 0.0;
    bool touching_ = false;
    bool pad_down_ = false;
    std::vector<Shake> shakes_;
    std::deque<TouchEvent> touch_events_;
    std::deque<PadEvent> pad_events_;

    std::deque<Seen> seen_;
    StimulusBody stimulus_;
    bool new_stimulus_ = false;
    bool have_result_ = false;
    bool result_hit_ = false;
    int set_index_ = -1;
    TimeUs set_started_ = -1;

    Step step_ = Step::idle;
    TimeUs busy_until_ = 0;
    TimeUs watch_start_ = 0;
    TimeUs target_started_ = 0;
    std::optional<TimeUs> inside_since_;
    TimeUs lift_after_hit_ = 0;
    bool pending_lift_ = false;
};

} // namespace

SimResult simulate_run(const SimScenario& scenario, SimOptions options)
{
    scenario.validate();
    Run run(scenario, options);
    return run.run();
}

} // namespace farpoint
