#include "farpoint/transfer.hpp"

#include "farpoint/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace farpoint {

void TransferParams::validate() const
{
    if (!(cd_min >= 0.0) || !(cd_max >= cd_min))
        throw ConfigError("transfer: need 0 <= cd_min <= cd_max");
    if (!(lambda > 0.0))
        throw ConfigError("transfer: lambda must be positive");
    if (!(v_low_clamp <= v_mid && v_mid <= v_high_clamp))
        throw ConfigError("transfer: need v_low_clamp <= v_mid <= v_high_clamp");
}

double cd_gain(const TransferParams& p, double speed_m_s)
{
    const double v = std::clamp(speed_m_s, p.v_low_clamp, p.v_high_clamp);
    return p.cd_min + (p.cd_max - p.cd_min) / (1.0 + std::exp(-p.lambda * (v - p.v_mid)));
}

PixelPoint displacement(TransferState& state, const TransferParams& params, const SurfacePoint& finger,
                        TimeUs t_us, const DisplayPlane& display)
{
    if (!state.stroke_active) {
        state.stroke_active = true;
        state.last_finger = finger;
        state.last_t_us = t_us;
        return {};
    }
    if (t_us < state.last_t_us)
        throw OrderingError("touch sample precedes the previous one");
    if (t_us == state.last_t_us) {
        spdlog::debug("transfer: dropping touch sample with zero elapsed time at {} us", t_us);
        return {};
    }

    const double dx = finger.x - state.last_finger.x;
    const double dy = finger.y - state.last_finger.y;
    const double dt = static_cast<double>(t_us - state.last_t_us) * 1e-6;
    const double gain = cd_gain(params, std::hypot(dx, dy) / dt);

    state.last_finger = finger;
    state.last_t_us = t_us;
    return {gain * dx * display.px_per_m_x(), gain * dy * display.px_per_m_y()};
}

} // namespace farpoint
