#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oscfit/corpus.hpp"
#include "oscfit/signal.hpp"

namespace oscfit {

// A velocity-zero-crossing-bounded slice of a smoothed trajectory.
// Velocity keeps a constant sign at interior samples.
struct GestureSegment {
    PairKey key;
    Modality modality = Modality::EMA;
    int gesture_index = 0;
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;  // inclusive; start_idx < end_idx
    std::vector<double> positions;     // smoothed, mm
    std::vector<double> velocity;      // mm/s
    std::vector<double> acceleration;  // mm/s^2
    double sample_rate = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;

    std::size_t size() const { return positions.size(); }
};

// Boundary indices: i is reported when velocity[i] == 0 (runs of exact
// zeros collapse to their first index) or when the sign flips between i and
// i+1 (the last index before the change). The first and last samples are
// always included as virtual boundaries.
std::vector<std::size_t> find_zero_crossings(std::span<const double> velocity);

// Cuts the trajectory at velocity zero-crossings and keeps segments with at
// least min_samples samples and peak |velocity| >= min_peak_vel. Retained
// segments are indexed 0,1,2,... in time order.
std::vector<GestureSegment> segment_gestures(const SmoothedTrajectory& traj, int min_samples,
                                             double min_peak_vel);

}  // namespace oscfit
