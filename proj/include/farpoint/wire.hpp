#pragma once

#include "farpoint/engine.hpp"
#include "farpoint/experiment.hpp"
#include "farpoint/geometry.hpp"
#include "farpoint/transfer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace farpoint {

inline constexpr int kProtocolVersion = 1;

enum class MessageType { pose, touch, button, cursor, stimulus, click_result, session_control };

std::string_view to_string(MessageType t);

// Bits of PoseBody::buttons. Informational: state edges travel as separate
// touch/button messages.
namespace button_bits {
inline constexpr std::uint32_t pad_touch = 1u << 0;
inline constexpr std::uint32_t pad_press = 1u << 1;
inline constexpr std::uint32_t trigger = 1u << 2;
} // namespace button_bits

struct PoseBody {
    Mat4 matrix;
    std::uint32_t buttons = 0;
    friend bool operator==(const PoseBody&, const PoseBody&) = default;
};

enum class TouchPhase { down, move, up };

struct TouchBody {
    TouchPhase phase = TouchPhase::move;
    SurfacePoint at;
    friend bool operator==(const TouchBody&, const TouchBody&) = default;
};

enum class ButtonName { pad, trigger };
enum class ButtonEdge { press, release };

struct ButtonBody {
    ButtonName name = ButtonName::pad;
    ButtonEdge edge = ButtonEdge::press;
    friend bool operator==(const ButtonBody&, const ButtonBody&) = default;
};

struct CursorBody {
    PixelPoint position;
    Mode mode = Mode::absolute;
    friend bool operator==(const CursorBody&, const CursorBody&) = default;
};

// Current target display. Colours are rendering hints for display clients.
struct StimulusBody {
    int set_index = 0;
    bool practice = false;
    Technique technique = Technique::absolute;
    double width_px = 0.0;
    double amplitude_px = 0.0;
    double left_center_px = 0.0;
    double right_center_px = 0.0;
    Side target = Side::left;
    int hits = 0;
    std::string target_color = "green";
    std::string other_color = "white";
    friend bool operator==(const StimulusBody&, const StimulusBody&) = default;
};

struct ClickResultBody {
    bool hit = false;
    int trial_index = 0;
    int set_index = 0;
    PixelPoint position;
    friend bool operator==(const ClickResultBody&, const ClickResultBody&) = default;
};

// join/leave/ping/pong/info/error/paused/resumed/study_complete.
struct SessionControlBody {
    std::string action;
    std::optional<std::string> role; // "producer" | "consumer"
    std::optional<std::string> technique;
    std::optional<std::string> detail;
    std::optional<std::int64_t> probe_us;
    friend bool operator==(const SessionControlBody&, const SessionControlBody&) = default;
};

using MessageBody =
    std::variant<PoseBody, TouchBody, ButtonBody, CursorBody, StimulusBody, ClickResultBody, SessionControlBody>;

struct WireMessage {
    std::string session;
    std::uint64_t seq = 0;
    TimeUs t_us = 0;
    MessageBody body;

    friend bool operator==(const WireMessage&, const WireMessage&) = default;

    MessageType type() const { return static_cast<MessageType>(body.index()); }
};

// One UTF-8 JSON text per message; see docs/protocol.md.
std::string encode(const WireMessage& msg);

// Throws DecodeError (with byte offset) on malformed frames and
// UnknownMessageType for type tags this version does not define.
WireMessage decode(std::string_view frame);

// Producer-side messages that map to engine input.
bool is_input(MessageType t);

} // namespace farpoint
