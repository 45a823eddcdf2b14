#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "oscfit/corpus.hpp"

namespace oscfit {

enum class DampingClass { Underdamped, Critical, Overdamped };

std::string_view to_string(DampingClass c);
DampingClass damping_class_from_string(std::string_view s);

// Parameters of x" + b x' + k (x - T) = 0 with unit mass: b and k absorb m.
struct OscillatorParams {
    double b = 0.0;  // damping, 1/s
    double k = 0.0;  // stiffness, 1/s^2
    double T = 0.0;  // target position, mm

    bool is_attractor() const { return k > 0.0; }

    // Classification uses a 1e-9 relative band around b^2 = 4k; exact
    // critical damping is measure-zero in estimated parameters.
    DampingClass damping_class() const;
};

struct SimState {
    double x = 0.0;  // mm
    double v = 0.0;  // mm/s
    double t = 0.0;  // s
};

// b = 2 sqrt(k) for unit mass. k < 0 throws.
double critical_damping(double k);

struct Motion {
    std::vector<double> positions;
    std::vector<double> velocities;
};

// Closed-form solution per damping class, evaluated at the given times.
// Requires k > 0 (point attractor) and non-decreasing times.
Motion solve_analytic(const OscillatorParams& p, double x0, double v0,
                      std::span<const double> times);

// Classic fixed-step RK4 on (x' = v, v' = -b v - k (x - T)). Step is
// 1 / sample_rate; output has n_steps + 1 samples including the initial
// state. Throws on non-finite intermediate state.
Motion integrate_rk4(const OscillatorParams& p, double x0, double v0, double sample_rate,
                     std::size_t n_steps);

// Analytic solution on a uniform grid plus i.i.d. Gaussian noise.
// Deterministic for a fixed seed. Labels on the returned record are left
// empty for the caller to fill.
TrajectoryRecord synth_gesture(const OscillatorParams& p, double x0, double v0,
                               double sample_rate, double duration, double noise_sd,
                               std::uint64_t seed);

// Whole-corpus synthesis: one gesture per (speaker, word, rep, modality),
// with per-word base parameters, per-token jitter, and an optional additive
// offset on ultrasound targets.
struct SynthConfig {
    int speakers = 6;
    int words = 29;
    int reps = 4;
    double ema_rate = 1250.0;  // Hz
    double us_rate = 81.0;     // Hz
    double noise_sd = 0.0;     // mm
    double us_t_offset = 0.0;  // mm, added to US targets
    double span_frac = 0.80;   // fraction of the first velocity half-cycle sampled
    std::string channel = "TDx";
    std::uint64_t seed = 0;
    double k_min = 150.0, k_max = 600.0;  // 1/s^2
    double b_min = 10.0, b_max = 30.0;    // 1/s
    double t_min = -15.0, t_max = 15.0;   // mm
    double amp_min = 3.0, amp_max = 12.0; // mm, initial displacement from target
};

struct SynthToken {
    TrajectoryRecord record;
    OscillatorParams truth;
};

std::vector<SynthToken> synth_corpus(const SynthConfig& cfg);

}  // namespace oscfit
