#pragma once

#include <span>
#include <vector>

#include "oscfit/corpus.hpp"

namespace oscfit {

// A trajectory after truncated-DCT smoothing, with derivatives of the
// smoothed positions. All derived series share the base record's length.
struct SmoothedTrajectory {
    TrajectoryRecord base;
    std::vector<double> smoothed;      // mm
    std::vector<double> velocity;      // mm/s
    std::vector<double> acceleration;  // mm/s^2
    int dct_order = 0;
};

// Resamples onto the grid t0 + j / target_rate covering the original span,
// by linear interpolation. Upsampling is refused.
TrajectoryRecord downsample(const TrajectoryRecord& record, double target_rate);

// Subtracts the arithmetic mean. No scaling.
TrajectoryRecord center(const TrajectoryRecord& record);

// Keeps DCT-II coefficients 0..order-1 (orthonormal scaling) and
// reconstructs; an order-N transform reproduces the input. Derivatives are
// central differences with one-sided endpoints, applied once for velocity
// and twice for acceleration.
SmoothedTrajectory dct_smooth(const TrajectoryRecord& record, int order);

// Central differences at interior points, first-order one-sided at the two
// endpoints. Needs at least 3 samples.
std::vector<double> differentiate(std::span<const double> values, double sample_rate);

}  // namespace oscfit
