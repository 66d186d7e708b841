#include "farpoint/filtering.hpp"

#include "farpoint/error.hpp"

#include <string>

namespace farpoint {

void FilterParams::validate() const
{
    if (!(f_min_hz > 0.0) || !(beta >= 0.0) || !(f_deriv_hz > 0.0))
        throw ConfigError("filter: need f_min > 0, beta >= 0, f_deriv > 0");
}

double smoothing_alpha(double dt_s, double hz)
{
    const double tau = 1.0 / (2.0 * kPi * hz);
    return dt_s / (dt_s + tau);
}

PixelPoint filter_step(FilterState& state, const FilterParams& params, const PixelPoint& raw, TimeUs t_us)
{
    if (!state.initialized) {
        state.last_output = raw;
        state.last_raw = raw;
        state.velocity = {};
        state.speed_estimate = 0.0;
        state.last_t_us = t_us;
        state.initialized = true;
        return raw;
    }
    if (t_us <= state.last_t_us)
        throw OrderingError("filter sample at " + std::to_string(t_us) + " us is not after " +
                            std::to_string(state.last_t_us) + " us");

    const double dt = static_cast<double>(t_us - state.last_t_us) * 1e-6;
    const PixelPoint v = (raw - state.last_raw) * (1.0 / dt);
    state.velocity = state.velocity + (v - state.velocity) * smoothing_alpha(dt, params.f_deriv_hz);
    state.speed_estimate = state.velocity.norm();

    const double alpha = smoothing_alpha(dt, params.f_min_hz + params.beta * state.speed_estimate);
    const PixelPoint out = state.last_output + (raw - state.last_output) * alpha;
    state.last_output = out;
    state.last_raw = raw;
    state.last_t_us = t_us;
    return out;
}

} // namespace farpoint
