#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oscfit/corpus.hpp"
#include "oscfit/gesture.hpp"
#include "oscfit/oscillator.hpp"

namespace oscfit {

// Feature library for the first-order system (x' = y, y' = -k x - b y + kT):
// columns [x, y, 1], regression targets x' (pinned by the constraint) and y'.
struct FeatureMatrix {
    std::vector<double> position;      // column 1, mm
    std::vector<double> velocity;      // column 2, mm/s; doubles as the x' target
    std::vector<double> acceleration;  // y' target, mm/s^2

    std::size_t rows() const { return position.size(); }
};

// 2x3 coefficient matrix. Row 0 maps features to x' and is fixed to
// [0, 1, 0] by the equality constraint; row 1 maps features to y' and
// carries [-k, -b, kT].
struct CoefficientMatrix {
    std::array<std::array<double, 3>, 2> xi{{{0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}}};
    double condition = 0.0;  // 1-norm condition estimate of the normal matrix
    bool converged = false;
    int n_iter = 0;

    OscillatorParams params() const;
};

struct FitResult {
    PairKey key;
    Modality modality = Modality::EMA;
    int gesture_index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    OscillatorParams params;
    std::optional<double> r2_pos;
    std::optional<double> r2_vel;
    bool converged = false;
    int n_iter = 0;
};

FeatureMatrix build_features(const GestureSegment& seg);

// Equality-constrained least squares: the constraint fully determines the
// x' row, so the y' row is an ordinary least-squares solve of acceleration
// on [x, y, 1] (normal equations, column-equilibrated Cholesky), refined
// for at most 30 residual-correction iterations. Throws
// SingularSystemError on rank deficiency and TargetUndefinedError when
// |k| < 1e-8 makes T = c/k ill-posed.
CoefficientMatrix fit_constrained_ls(const FeatureMatrix& feat);

// 1 - SS_res / SS_tot with SS_tot about the mean of `observed`; empty when
// the observed series is constant (SS_tot = 0).
std::optional<double> r_squared(std::span<const double> model, std::span<const double> observed);

// Re-integrates the identified oscillator from the segment's first sample
// and scores R^2 on velocity and position. Requires k > 0.
FitResult score_fit(const GestureSegment& seg, const CoefficientMatrix& coef);

struct FitConfig {
    double target_rate = 81.0;   // Hz
    int dct_order = 5;
    int min_samples = 5;
    double min_peak_vel = 1.0;   // mm/s
    int jobs = 1;
    double condition_warn = 1e10;
};

struct SkipRecord {
    PairKey key;
    std::optional<Modality> modality;  // empty for pair-level entries
    int gesture_index = -1;            // -1 when the whole trajectory was skipped
    std::string stage;
    std::string reason;
};

struct CorpusFitOutput {
    std::vector<FitResult> fits;       // sorted by (key, modality, gesture_index)
    std::vector<SkipRecord> skips;
    std::vector<std::string> warnings; // gesture-count mismatches, conditioning
};

// Full pipeline per trajectory of each pair: downsample to the target rate,
// center, DCT-smooth, segment, fit, score. Per-gesture failures become skip
// records; the batch never aborts.
CorpusFitOutput fit_corpus(const std::vector<RecordPair>& pairs, const FitConfig& cfg);

struct SummaryRow {
    std::string variable;  // channel name
    Modality modality = Modality::EMA;
    std::size_t n = 0;
    double r2_mean = 0.0;
    double r2_sd = 0.0;
    double r2_min = 0.0;
    double r2_max = 0.0;
};

// Per-(channel, modality) statistics of the velocity R^2.
std::vector<SummaryRow> summarize_fits(const std::vector<FitResult>& fits);

}  // namespace oscfit
