#pragma once

#include "farpoint/geometry.hpp"

namespace farpoint {

// Speed-adaptive single-pole low-pass. At rest the cutoff sits at f_min;
// it rises linearly with input speed so fast motions are not lagged. The
// speed is the magnitude of the low-passed signed velocity, so jitter that
// averages out does not open the filter.
struct FilterParams {
    double f_min_hz = 0.25;
    double beta = 0.01;      // Hz per (px/s)
    double f_deriv_hz = 1.0; // cutoff of the speed estimator

    friend bool operator==(const FilterParams&, const FilterParams&) = default;

    void validate() const;
};

struct FilterState {
    PixelPoint last_output;
    PixelPoint last_raw;
    PixelPoint velocity;         // px/s, low-passed raw velocity
    double speed_estimate = 0.0; // |velocity|
    TimeUs last_t_us = 0;
    bool initialized = false;

    friend bool operator==(const FilterState&, const FilterState&) = default;
};

// Smoothing weight of a single-pole low-pass with cutoff `hz` over `dt_s`.
double smoothing_alpha(double dt_s, double hz);

// One filter update. The first sample passes through. Throws OrderingError
// unless t_us is strictly after the previous sample.
PixelPoint filter_step(FilterState& state, const FilterParams& params, const PixelPoint& raw, TimeUs t_us);

} // namespace farpoint
