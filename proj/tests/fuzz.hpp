#pragma once

#include "farpoint/random.hpp"
#include "farpoint/wire.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace farpoint::fuzz {

// Random valid messages for codec round trips: awkward text, extreme
// doubles, every message type.
inline std::string random_text(Rng& rng)
{
    static const std::vector<std::string> pieces{"a", "Z", "7", "_", "-", " ", "\"", "\\", "/", "\n", "\t",
                                                 "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x98\x80", "{", "}"};
    std::string s;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i)
        s += pieces[rng.below(pieces.size())];
    return s;
}

inline double random_double(Rng& rng)
{
    switch (rng.below(4)) {
    case 0:
        return rng.normal(0, 1);
    case 1:
        return rng.uniform(-1e4, 1e4);
    case 2:
        return std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(200)) - 100);
    default:
        return static_cast<double>(static_cast<std::int64_t>(rng.below(20000)) - 10000);
    }
}

inline std::optional<std::string> maybe_text(Rng& rng)
{
    if (rng.below(2))
        return random_text(rng);
    return std::nullopt;
}

inline WireMessage random_message(Rng& rng)
{
    WireMessage m;
    m.session = random_text(rng);
    m.seq = rng.next() >> rng.below(64);
    m.t_us = static_cast<TimeUs>(rng.next() >> 1) - static_cast<TimeUs>(rng.next() >> 2);
    switch (rng.below(7)) {
    case 0: {
        PoseBody p;
        for (auto& v : p.matrix.m)
            v = random_double(rng);
        p.buttons = static_cast<std::uint32_t>(rng.next());
        m.body = p;
        break;
    }
    case 1:
        m.body = TouchBody{static_cast<TouchPhase>(rng.below(3)), {random_double(rng), random_double(rng)}};
        break;
    case 2:
        m.body = ButtonBody{static_cast<ButtonName>(rng.below(2)), static_cast<ButtonEdge>(rng.below(2))};
        break;
    case 3:
        m.body = CursorBody{{random_double(rng), random_double(rng)}, static_cast<Mode>(rng.below(5))};
        break;
    case 4: {
        StimulusBody s;
        s.set_index = static_cast<int>(rng.below(1000));
        s.practice = rng.below(2);
        s.technique = static_cast<Technique>(rng.below(4));
        s.width_px = random_double(rng);
        s.amplitude_px = random_double(rng);
        s.left_center_px = random_double(rng);
        s.right_center_px = random_double(rng);
        s.target = static_cast<Side>(rng.below(2));
        s.hits = static_cast<int>(rng.below(7));
        s.target_color = random_text(rng);
        s.other_color = random_text(rng);
        m.body = s;
        break;
    }
    case 5:
        m.body = ClickResultBody{rng.below(2) == 1, static_cast<int>(rng.below(7)), static_cast<int>(rng.below(100)),
                                 {random_double(rng), random_double(rng)}};
        break;
    default: {
        SessionControlBody c;
        c.action = random_text(rng);
        c.role = maybe_text(rng);
        c.technique = maybe_text(rng);
        c.detail = maybe_text(rng);
        if (rng.below(2))
            c.probe_us = static_cast<std::int64_t>(rng.next() >> 2) - static_cast<std::int64_t>(rng.next() >> 2);
        m.body = c;
    }
    }
    return m;
}

} // namespace farpoint::fuzz
