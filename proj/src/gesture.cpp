#include "oscfit/gesture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oscfit {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<std::size_t> find_zero_crossings(std::span<const double> velocity) {
    const std::size_t n = velocity.size();
    if (n < 2) throw std::invalid_argument("find_zero_crossings: need at least 2 samples");

    std::vector<std::size_t> out;
    out.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (velocity[i] == 0.0) {
            if (i == 0 || velocity[i - 1] != 0.0) out.push_back(i);  // first of a zero run
        } else if (i + 1 < n && velocity[i + 1] != 0.0 &&
                   sign_of(velocity[i]) != sign_of(velocity[i + 1])) {
            out.push_back(i);
        }
    }
    out.push_back(n - 1);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<GestureSegment> segment_gestures(const SmoothedTrajectory& traj, int min_samples,
                                             double min_peak_vel) {
    if (min_samples < 3) throw std::invalid_argument("segment_gestures: min_samples must be >= 3");

    const auto boundaries = find_zero_crossings(traj.velocity);
    std::vector<GestureSegment> segments;
    int next_index = 0;
    for (std::size_t bi = 0; bi + 1 < boundaries.size(); ++bi) {
        const std::size_t start = boundaries[bi];
        const std::size_t end = boundaries[bi + 1];
        const std::size_t count = end - start + 1;
        if (count < static_cast<std::size_t>(min_samples)) continue;

        double peak = 0.0;
        for (std::size_t i = start; i <= end; ++i) {
            peak = std::max(peak, std::abs(traj.velocity[i]));
        }
        if (peak < min_peak_vel) continue;

        GestureSegment seg;
        seg.key = traj.base.key();
        seg.modality = traj.base.modality;
        seg.gesture_index = next_index++;
        seg.start_idx = start;
        seg.end_idx = end;
        seg.positions.assign(traj.smoothed.begin() + static_cast<std::ptrdiff_t>(start),
                             traj.smoothed.begin() + static_cast<std::ptrdiff_t>(end) + 1);
        seg.velocity.assign(traj.velocity.begin() + static_cast<std::ptrdiff_t>(start),
                            traj.velocity.begin() + static_cast<std::ptrdiff_t>(end) + 1);
        seg.acceleration.assign(traj.acceleration.begin() + static_cast<std::ptrdiff_t>(start),
                                traj.acceleration.begin() + static_cast<std::ptrdiff_t>(end) + 1);
        seg.sample_rate = traj.base.sample_rate;
        seg.t_start = traj.base.time_at(start);
        seg.t_end = traj.base.time_at(end);
        segments.push_back(std::move(seg));
    }
    return segments;
}

}  // namespace oscfit
