#include "farpoint/wire.hpp"

#include "farpoint/error.hpp"

#include <json.hpp>

#include <array>

namespace farpoint {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

constexpr std::array<std::string_view, 7> kTypeNames{"pose",   "touch",        "button",         "cursor",
                                                     "stimulus", "click_result", "session_control"};

// Best-effort location of a field inside the raw frame for error reports.
std::size_t field_offset(std::string_view frame, std::string_view key)
{
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto pos = frame.find(quoted);
    return pos == std::string_view::npos ? 0 : pos;
}

class Reader {
public:
    Reader(const json& obj, std::string_view frame, std::string_view where) : obj_(obj), frame_(frame), where_(where)
    {
        if (!obj_.is_object())
            fail(where_, "expected an object");
    }

    [[noreturn]] void fail(std::string_view key, const std::string& what) const
    {
        throw DecodeError(std::string(where_) + "." + std::string(key) + ": " + what, field_offset(frame_, key));
    }

    const json& field(std::string_view key) const
    {
        const auto it = obj_.find(key);
        if (it == obj_.end())
            fail(key, "missing");
        return *it;
    }
    bool has(std::string_view key) const { return obj_.contains(key); }

    double number(std::string_view key) const
    {
        const auto& v = field(key);
        if (!v.is_number())
            fail(key, "expected a number");
        return v.get<double>();
    }
    std::int64_t integer(std::string_view key) const
    {
        const auto& v = field(key);
        if (!v.is_number_integer())
            fail(key, "expected an integer");
        return v.get<std::int64_t>();
    }
    std::uint64_t unsigned_integer(std::string_view key) const
    {
        const auto& v = field(key);
        if (!v.is_number_unsigned())
            fail(key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool boolean(std::string_view key) const
    {
        const auto& v = field(key);
        if (!v.is_boolean())
            fail(key, "expected a boolean");
        return v.get<bool>();
    }
    std::string string(std::string_view key) const
    {
        const auto& v = field(key);
        if (!v.is_string())
            fail(key, "expected a string");
        return v.get<std::string>();
    }
    std::optional<std::string> opt_string(std::string_view key) const
    {
        if (!has(key))
            return std::nullopt;
        return string(key);
    }

    template <class Enum, class Parse>
    Enum enumeration(std::string_view key, Parse parse) const
    {
        const std::string s = string(key);
        try {
            return parse(s);
        } catch (const Error&) {
            fail(key, "unknown value '" + s + "'");
        }
    }

    const json& obj() const { return obj_; }
    std::string_view frame() const { return frame_; }

private:
    const json& obj_;
    std::string_view frame_;
    std::string_view where_;
};

TouchPhase phase_from(const std::string& s)
{
    if (s == "down")
        return TouchPhase::down;
    if (s == "move")
        return TouchPhase::move;
    if (s == "up")
        return TouchPhase::up;
    throw Error("phase");
}
std::string_view to_string(TouchPhase p) { return p == TouchPhase::down ? "down" : p == TouchPhase::move ? "move" : "up"; }

ButtonName button_from(const std::string& s)
{
    if (s == "pad")
        return ButtonName::pad;
    if (s == "trigger")
        return ButtonName::trigger;
    throw Error("button");
}
ButtonEdge edge_from(const std::string& s)
{
    if (s == "press")
        return ButtonEdge::press;
    if (s == "release")
        return ButtonEdge::release;
    throw Error("edge");
}
Side side_from(const std::string& s)
{
    if (s == "left")
        return Side::left;
    if (s == "right")
        return Side::right;
    throw Error("side");
}

ordered body_json(const MessageBody& body)
{
    ordered b = ordered::object();
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PoseBody>) {
                b["m"] = v.matrix.m;
                b["buttons"] = v.buttons;
            } else if constexpr (std::is_same_v<T, TouchBody>) {
                b["phase"] = to_string(v.phase);
                b["x"] = v.at.x;
                b["y"] = v.at.y;
            } else if constexpr (std::is_same_v<T, ButtonBody>) {
                b["name"] = v.name == ButtonName::pad ? "pad" : "trigger";
                b["edge"] = v.edge == ButtonEdge::press ? "press" : "release";
            } else if constexpr (std::is_same_v<T, CursorBody>) {
                b["x"] = v.position.x;
                b["y"] = v.position.y;
                b["mode"] = to_string(v.mode);
            } else if constexpr (std::is_same_v<T, StimulusBody>) {
                b["set_index"] = v.set_index;
                b["practice"] = v.practice;
                b["technique"] = to_string(v.technique);
                b["width_px"] = v.width_px;
                b["amplitude_px"] = v.amplitude_px;
                b["left_center_px"] = v.left_center_px;
                b["right_center_px"] = v.right_center_px;
                b["target"] = v.target == Side::left ? "left" : "right";
                b["hits"] = v.hits;
                b["target_color"] = v.target_color;
                b["other_color"] = v.other_color;
            } else if constexpr (std::is_same_v<T, ClickResultBody>) {
                b["hit"] = v.hit;
                b["trial_index"] = v.trial_index;
                b["set_index"] = v.set_index;
                b["x"] = v.position.x;
                b["y"] = v.position.y;
            } else {
                b["action"] = v.action;
                if (v.role)
                    b["role"] = *v.role;
                if (v.technique)
                    b["technique"] = *v.technique;
                if (v.detail)
                    b["detail"] = *v.detail;
                if (v.probe_us)
                    b["probe_us"] = *v.probe_us;
            }
        },
        body);
    return b;
}

int small_int(const Reader& r, std::string_view key)
{
    const auto v = r.integer(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        r.fail(key, "out of range");
    return static_cast<int>(v);
}

MessageBody body_from(MessageType type, const Reader& r)
{
    switch (type) {
    case MessageType::pose: {
        PoseBody p;
        const auto& m = r.field("m");
        if (!m.is_array() || m.size() != 16)
            r.fail("m", "expected 16 numbers, got " + std::to_string(m.is_array() ? m.size() : 0));
        for (std::size_t i = 0; i < 16; ++i) {
            if (!m[i].is_number())
                r.fail("m", "element " + std::to_string(i) + " is not a number");
            p.matrix.m[i] = m[i].get<double>();
        }
        const auto buttons = r.unsigned_integer("buttons");
        if (buttons > std::numeric_limits<std::uint32_t>::max())
            r.fail("buttons", "out of range");
        p.buttons = static_cast<std::uint32_t>(buttons);
        return p;
    }
    case MessageType::touch:
        return TouchBody{r.enumeration<TouchPhase>("phase", phase_from), {r.number("x"), r.number("y")}};
    case MessageType::button:
        return ButtonBody{r.enumeration<ButtonName>("name", button_from),
                          r.enumeration<ButtonEdge>("edge", edge_from)};
    case MessageType::cursor:
        return CursorBody{{r.number("x"), r.number("y")},
                          r.enumeration<Mode>("mode", [](const std::string& s) { return mode_from_string(s); })};
    case MessageType::stimulus: {
        StimulusBody s;
        s.set_index = small_int(r, "set_index");
        s.practice = r.boolean("practice");
        s.technique = r.enumeration<Technique>("technique", [](const std::string& v) { return technique_from_string(v); });
        s.width_px = r.number("width_px");
        s.amplitude_px = r.number("amplitude_px");
        s.left_center_px = r.number("left_center_px");
        s.right_center_px = r.number("right_center_px");
        s.target = r.enumeration<Side>("target", side_from);
        s.hits = small_int(r, "hits");
        s.target_color = r.string("target_color");
        s.other_color = r.string("other_color");
        return s;
    }
    case MessageType::click_result:
        return ClickResultBody{r.boolean("hit"), small_int(r, "trial_index"), small_int(r, "set_index"),
                               {r.number("x"), r.number("y")}};
    case MessageType::session_control: {
        SessionControlBody c;
        c.action = r.string("action");
        c.role = r.opt_string("role");
        c.technique = r.opt_string("technique");
        c.detail = r.opt_string("detail");
        if (r.has("probe_us"))
            c.probe_us = r.integer("probe_us");
        return c;
    }
    }
    throw DecodeError("unreachable message type", 0);
}

} // namespace

std::string_view to_string(MessageType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

bool is_input(MessageType t)
{
    return t == MessageType::pose || t == MessageType::touch || t == MessageType::button;
}

std::string encode(const WireMessage& msg)
{
    ordered j;
    j["v"] = kProtocolVersion;
    j["type"] = to_string(msg.type());
    j["session"] = msg.session;
    j["seq"] = msg.seq;
    j["t_us"] = msg.t_us;
    j["body"] = body_json(msg.body);
    return j.dump();
}

WireMessage decode(std::string_view frame)
{
    json j;
    try {
        j = json::parse(frame.begin(), frame.end());
    } catch (const json::parse_error& e) {
        throw DecodeError(std::string("malformed JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    const Reader top(j, frame, "frame");

    const auto version = top.integer("v");
    const std::string tag = top.string("type");
    std::optional<MessageType> type;
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == tag)
            type = static_cast<MessageType>(i);
    if (!type)
        throw UnknownMessageType(tag, kProtocolVersion);
    if (version != kProtocolVersion)
        top.fail("v", "unsupported protocol version " + std::to_string(version));

    WireMessage msg;
    msg.session = top.string("session");
    msg.seq = top.unsigned_integer("seq");
    msg.t_us = top.integer("t_us");
    const Reader body(top.field("body"), frame, "body");
    msg.body = body_from(*type, body);
    return msg;
}

} // namespace farpoint
