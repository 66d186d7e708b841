#include "farpoint/session.hpp"

#include "farpoint/error.hpp"

#include <spdlog/spdlog.h>

#include <utility>
#include <vector>

namespace farpoint {

std::optional<InputEvent> to_input_event(const WireMessage& msg)
{
    InputEvent ev;
    ev.t_us = msg.t_us;
    if (const auto* p = std::get_if<PoseBody>(&msg.body)) {
        ev.payload = input::Pose{DevicePose{p->matrix, msg.t_us}};
    } else if (const auto* t = std::get_if<TouchBody>(&msg.body)) {
        switch (t->phase) {
        case TouchPhase::down:
            ev.payload = input::TouchDown{t->at};
            break;
        case TouchPhase::move:
            ev.payload = input::TouchMove{t->at};
            break;
        case TouchPhase::up:
            ev.payload = input::TouchUp{};
            break;
        }
    } else if (const auto* b = std::get_if<ButtonBody>(&msg.body)) {
        const bool press = b->edge == ButtonEdge::press;
        if (b->name == ButtonName::pad)
            ev.payload = press ? decltype(ev.payload){input::PadPress{}} : decltype(ev.payload){input::PadRelease{}};
        else
            ev.payload =
                press ? decltype(ev.payload){input::TriggerPress{}} : decltype(ev.payload){input::TriggerRelease{}};
    } else {
        return std::nullopt;
    }
    return ev;
}

EngineConfig SessionConfig::engine_for(Technique t) const
{
    return {t, display, filter, t == Technique::relative ? relative_transfer : hybrid_transfer, options};
}

Session::Session(SessionConfig config, LogSink log)
    : config_(std::move(config)), log_(std::move(log)), engine_(config_.engine_for(config_.technique))
{
    if (config_.queue_capacity == 0)
        throw ConfigError("session queue capacity must be positive");
    if (config_.study) {
        study_.emplace(*config_.study, config_.display);
        sync_technique();
    }
}

void Session::sync_technique()
{
    const SetSpec* spec = study_ ? study_->current() : nullptr;
    if (!spec || spec->technique == engine_.config().technique)
        return;
    const TimeUs now = engine_.state().last_t_us;
    engine_ = CursorEngine(config_.engine_for(spec->technique));
    engine_.advance_time(now);
}

int Session::attach_consumer(Sink sink)
{
    std::lock_guard lock(mutex_);
    const int handle = next_consumer_++;
    consumers_.emplace(handle, std::move(sink));
    return handle;
}

void Session::detach_consumer(int handle)
{
    std::lock_guard lock(mutex_);
    consumers_.erase(handle);
}

bool Session::attach_producer()
{
    bool was_paused = false;
    {
        std::lock_guard lock(mutex_);
        if (producer_)
            return false;
        producer_ = true;
        was_paused = std::exchange(paused_, false);
    }
    if (was_paused)
        notify("resumed");
    return true;
}

void Session::detach_producer()
{
    {
        std::lock_guard lock(mutex_);
        producer_ = false;
        paused_ = true;
    }
    notify("paused");
}

SessionInfo Session::info() const
{
    std::lock_guard lock(mutex_);
    return {config_.session_id, engine_.config().technique, producer_, paused_, consumers_.size(), counters_, latency_};
}

void Session::set_latency(LatencyReport report)
{
    std::lock_guard lock(mutex_);
    latency_ = std::move(report);
}

void Session::enqueue(WireMessage msg)
{
    std::lock_guard lock(mutex_);
    if (queue_.size() >= config_.queue_capacity) {
        queue_.pop_front();
        ++counters_.dropped_overflow;
    }
    queue_.push_back(std::move(msg));
}

std::size_t Session::pump()
{
    std::size_t n = 0;
    for (;;) {
        WireMessage msg;
        {
            std::lock_guard lock(mutex_);
            if (queue_.empty())
                return n;
            msg = std::move(queue_.front());
            queue_.pop_front();
        }
        process(msg);
        ++n;
    }
}

void Session::submit(WireMessage msg)
{
    enqueue(std::move(msg));
    pump();
}

void Session::start()
{
    if (started_)
        return;
    started_ = true;
    const TimeUs t = engine_.state().last_t_us;
    const auto& s = engine_.state();
    last_cursor_ = s.position;
    last_mode_ = s.mode;
    cursor_sent_ = true;
    broadcast(CursorBody{s.position, s.mode}, t);
    if (study_)
        emit_stimulus(t);
}

void Session::process(const WireMessage& msg)
{
    auto count = [this](std::uint64_t SessionCounters::*field) {
        std::lock_guard lock(mutex_);
        ++(counters_.*field);
    };
    count(&SessionCounters::received);

    if (msg.session != config_.session_id || !is_input(msg.type())) {
        spdlog::debug("session {}: rejected {} frame seq {}", config_.session_id, to_string(msg.type()), msg.seq);
        count(&SessionCounters::rejected);
        return;
    }
    if (last_seq_ && msg.seq <= *last_seq_) {
        spdlog::debug("session {}: seq {} after {}, dropped", config_.session_id, msg.seq, *last_seq_);
        count(&SessionCounters::dropped_seq);
        return;
    }
    last_seq_ = msg.seq;

    if (const auto* pose = std::get_if<PoseBody>(&msg.body); pose && !DevicePose{pose->matrix, msg.t_us}.is_valid()) {
        spdlog::debug("session {}: invalid pose matrix at seq {}", config_.session_id, msg.seq);
        count(&SessionCounters::rejected);
        return;
    }
    if (msg.t_us < engine_.state().last_t_us) {
        count(&SessionCounters::dropped_time);
        return;
    }

    count(&SessionCounters::accepted);
    if (log_)
        log_(LogDirection::in, msg);
    start();
    apply(*to_input_event(msg));
}

void Session::apply(const InputEvent& event)
{
    const EngineOutput out = engine_.handle_event(event);
    if (!cursor_sent_ || out.cursor != last_cursor_ || out.mode != last_mode_ || out.mode_changed) {
        last_cursor_ = out.cursor;
        last_mode_ = out.mode;
        cursor_sent_ = true;
        broadcast(CursorBody{out.cursor, out.mode}, event.t_us);
    }
    if (!out.click)
        return;
    {
        std::lock_guard lock(mutex_);
        ++counters_.clicks;
    }
    if (!study_)
        return;

    const Click& click = *out.click;
    const SetSpec* before = study_->current();
    const int set_index = before ? before->index : 0;
    const auto outcome = study_->handle_click(click);
    if (!outcome)
        return;

    ClickResultBody result{true, 0, set_index, click.position};
    if (const auto* adv = std::get_if<TrialAdvance>(&*outcome)) {
        result.trial_index = adv->completed_trial;
    } else if (const auto* err = std::get_if<ErrorFeedback>(&*outcome)) {
        result.hit = false;
        result.trial_index = err->trial_index;
    } else {
        result.trial_index = kTrialsPerSet;
    }
    broadcast(result, event.t_us);

    if (std::holds_alternative<ErrorFeedback>(*outcome))
        return;
    if (study_->finished())
        broadcast(SessionControlBody{"study_complete", std::nullopt, std::nullopt, std::nullopt, std::nullopt},
                  event.t_us);
    else {
        sync_technique();
        emit_stimulus(event.t_us);
    }
}

void Session::emit_stimulus(TimeUs t_us)
{
    const SetSpec* spec = study_ ? study_->current() : nullptr;
    if (!spec)
        return;
    StimulusBody s;
    s.set_index = spec->index;
    s.practice = spec->practice;
    s.technique = spec->technique;
    s.width_px = spec->width_px;
    s.amplitude_px = spec->amplitude_px;
    s.left_center_px = spec->left_center_px;
    s.right_center_px = spec->right_center_px;
    s.target = study_->current_target();
    s.hits = study_->current_hits();
    broadcast(s, t_us);
}

void Session::broadcast(MessageBody body, TimeUs t_us)
{
    WireMessage msg;
    msg.session = config_.session_id;
    msg.seq = ++out_seq_;
    msg.t_us = t_us;
    msg.body = std::move(body);
    if (log_)
        log_(LogDirection::out, msg);

    std::vector<Sink> sinks;
    {
        std::lock_guard lock(mutex_);
        ++counters_.broadcasts;
        sinks.reserve(consumers_.size());
        for (const auto& [handle, sink] : consumers_)
            sinks.push_back(sink);
    }
    for (const auto& sink : sinks)
        sink(msg);
}

// Connection state, not engine output: no seq, not logged, not replayed.
void Session::notify(const std::string& action)
{
    SessionControlBody body;
    body.action = action;
    const WireMessage msg{config_.session_id, 0, engine_.state().last_t_us, body};
    std::vector<Sink> sinks;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [handle, sink] : consumers_)
            sinks.push_back(sink);
    }
    for (const auto& sink : sinks)
        sink(msg);
}

} // namespace farpoint
