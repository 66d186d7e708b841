#pragma once

#include "farpoint/geometry.hpp"

namespace farpoint {

// Position on a touch surface, metres. x right, y toward the user (screen down).
struct SurfacePoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const SurfacePoint&, const SurfacePoint&) = default;
};

// Sigmoid control-display gain over finger speed:
//   g(v) = cd_min + (cd_max - cd_min) / (1 + exp(-lambda * (clamp(v) - v_mid)))
struct TransferParams {
    double cd_min = 1.0;
    double cd_max = 50.0;
    double lambda = 8.0;       // s/m
    double v_mid = 0.25;       // m/s
    double v_low_clamp = 0.01; // m/s
    double v_high_clamp = 1.0; // m/s

    friend bool operator==(const TransferParams&, const TransferParams&) = default;

    // Trackpad relative mode of the hybrid technique.
    static TransferParams hybrid() { return {}; }
    // Touch tablet used by the pure relative technique.
    static TransferParams relative()
    {
        TransferParams p;
        p.cd_max = 200.0;
        return p;
    }

    void validate() const;
};

struct TransferState {
    SurfacePoint last_finger;
    TimeUs last_t_us = 0;
    bool stroke_active = false;

    friend bool operator==(const TransferState&, const TransferState&) = default;
};

double cd_gain(const TransferParams& params, double speed_m_s);

// Cursor motion for one finger sample of an active stroke. The first sample
// of a stroke only anchors it and returns zero; so does a sample with no
// elapsed time, which is dropped.
PixelPoint displacement(TransferState& state, const TransferParams& params, const SurfacePoint& finger,
                        TimeUs t_us, const DisplayPlane& display);

inline void end_stroke(TransferState& state) { state.stroke_active = false; }

} // namespace farpoint
