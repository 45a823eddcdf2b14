#include "oscfit/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include "oscfit/errors.hpp"
#include "oscfit/signal.hpp"

namespace oscfit {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    return out;
}

double norm2(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double norm1_mat(const Mat3& m) {
    double best = 0.0;
    for (int j = 0; j < 3; ++j) {
        best = std::max(best, std::abs(m[0][j]) + std::abs(m[1][j]) + std::abs(m[2][j]));
    }
    return best;
}

// Cholesky factorization of a symmetric positive definite 3x3. Returns the
// lower factor; throws SingularSystemError when a pivot collapses relative
// to the matrix scale.
Mat3 cholesky3(const Mat3& g, double pivot_tol) {
    Mat3 l{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = g[i][j];
            for (int k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
            if (i == j) {
                if (acc <= pivot_tol) {
                    throw SingularSystemError("rank-deficient feature matrix (collinear columns)");
                }
                l[i][i] = std::sqrt(acc);
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    return l;
}

Vec3 cholesky_solve(const Mat3& l, const Vec3& rhs) {
    Vec3 y{};
    for (int i = 0; i < 3; ++i) {
        double acc = rhs[i];
        for (int k = 0; k < i; ++k) acc -= l[i][k] * y[k];
        y[i] = acc / l[i][i];
    }
    Vec3 x{};
    for (int i = 2; i >= 0; --i) {
        double acc = y[i];
        for (int k = i + 1; k < 3; ++k) acc -= l[k][i] * x[k];
        x[i] = acc / l[i][i];
    }
    return x;
}

Mat3 cholesky_inverse(const Mat3& l) {
    Mat3 inv{};
    for (int col = 0; col < 3; ++col) {
        Vec3 e{};
        e[col] = 1.0;
        const Vec3 x = cholesky_solve(l, e);
        for (int row = 0; row < 3; ++row) inv[row][col] = x[row];
    }
    return inv;
}

}  // namespace

OscillatorParams CoefficientMatrix::params() const {
    OscillatorParams p;
    p.k = -xi[1][0];
    p.b = -xi[1][1];
    p.T = xi[1][2] / p.k;
    return p;
}

FeatureMatrix build_features(const GestureSegment& seg) {
    if (seg.size() < 4) {
        throw FitError("segment of " + std::to_string(seg.size()) +
                       " samples is underdetermined for 3 coefficients");
    }
    if (seg.velocity.size() != seg.size() || seg.acceleration.size() != seg.size()) {
        throw FitError("segment series lengths disagree");
    }
    FeatureMatrix feat;
    feat.position = seg.positions;
    feat.velocity = seg.velocity;
    feat.acceleration = seg.acceleration;
    return feat;
}

CoefficientMatrix fit_constrained_ls(const FeatureMatrix& feat) {
    const std::size_t n = feat.rows();
    if (n < 4) throw FitError("feature matrix needs at least 4 rows");

    // Column norms for equilibration; a zero column is already rank-deficient.
    Vec3 col_norm{};
    for (std::size_t i = 0; i < n; ++i) {
        col_norm[0] += feat.position[i] * feat.position[i];
        col_norm[1] += feat.velocity[i] * feat.velocity[i];
    }
    col_norm[0] = std::sqrt(col_norm[0]);
    col_norm[1] = std::sqrt(col_norm[1]);
    col_norm[2] = std::sqrt(static_cast<double>(n));
    if (col_norm[0] == 0.0 || col_norm[1] == 0.0) {
        throw SingularSystemError("rank-deficient feature matrix (zero column)");
    }
    const Vec3 scale = {1.0 / col_norm[0], 1.0 / col_norm[1], 1.0 / col_norm[2]};

    // Normal equations G xi = c with G = Theta^T Theta, c = Theta^T accel.
    Mat3 g{};
    Vec3 c{};
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 row = {feat.position[i], feat.velocity[i], 1.0};
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) g[a][b] += row[a] * row[b];
            c[a] += row[a] * feat.acceleration[i];
        }
    }
    g[1][0] = g[0][1];
    g[2][0] = g[0][2];
    g[2][1] = g[1][2];

    Mat3 gs{};
    Vec3 cs{};
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) gs[a][b] = g[a][b] * scale[a] * scale[b];
        cs[a] = c[a] * scale[a];
    }

    // Equilibrated G has unit diagonal, so an absolute pivot floor works.
    const Mat3 l = cholesky3(gs, 1e-12);

    CoefficientMatrix out;
    {
        // cond_1(G) through the equilibrated inverse: G^-1 = D Gs^-1 D.
        const Mat3 gs_inv = cholesky_inverse(l);
        Mat3 g_inv{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) g_inv[a][b] = scale[a] * gs_inv[a][b] * scale[b];
        }
        out.condition = norm1_mat(g) * norm1_mat(g_inv);
    }

    Vec3 xi = cholesky_solve(l, cs);
    out.n_iter = 1;

    // Residual-correction refinement of the normal-equations solve.
    const double c_scale = std::max(norm2(cs), 1e-300);
    const Vec3 r0 = {cs[0] - mat_vec(gs, xi)[0], cs[1] - mat_vec(gs, xi)[1],
                     cs[2] - mat_vec(gs, xi)[2]};
    double rho_prev = norm2(r0);
    const double rho0 = std::max(rho_prev, 1e-300);
    if (rho_prev <= 1e-10 * c_scale) {
        out.converged = true;
    } else {
        constexpr int kMaxIter = 30;
        Vec3 residual = r0;
        while (out.n_iter < kMaxIter) {
            const Vec3 delta = cholesky_solve(l, residual);
            for (int a = 0; a < 3; ++a) xi[a] += delta[a];
            ++out.n_iter;
            const Vec3 gv = mat_vec(gs, xi);
            residual = {cs[0] - gv[0], cs[1] - gv[1], cs[2] - gv[2]};
            const double rho = norm2(residual);
            if (std::abs(rho_prev - rho) < 1e-10 * rho0 || rho <= 1e-10 * c_scale) {
                out.converged = true;
                break;
            }
            rho_prev = rho;
        }
    }

    out.xi[0] = {0.0, 1.0, 0.0};
    out.xi[1] = {xi[0] * scale[0], xi[1] * scale[1], xi[2] * scale[2]};

    if (std::abs(out.xi[1][0]) < 1e-8) {
        throw TargetUndefinedError("|k| < 1e-8, target T = c/k is ill-posed");
    }
    return out;
}

std::optional<double> r_squared(std::span<const double> model, std::span<const double> observed) {
    const std::size_t n = observed.size();
    const double mean =
        std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(n);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = observed[i] - model[i];
        const double m = observed[i] - mean;
        ss_res += d * d;
        ss_tot += m * m;
    }
    if (ss_tot == 0.0) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

FitResult score_fit(const GestureSegment& seg, const CoefficientMatrix& coef) {
    const OscillatorParams p = coef.params();
    if (!p.is_attractor()) {
        throw NonAttractorError("estimated k = " + std::to_string(p.k) +
                                " <= 0, cannot re-integrate toward a target");
    }

    const Motion sim =
        integrate_rk4(p, seg.positions.front(), seg.velocity.front(), seg.sample_rate,
                      seg.size() - 1);

    FitResult res;
    res.key = seg.key;
    res.modality = seg.modality;
    res.gesture_index = seg.gesture_index;
    res.t_start = seg.t_start;
    res.t_end = seg.t_end;
    res.params = p;
    res.r2_vel = r_squared(sim.velocities, seg.velocity);
    res.r2_pos = r_squared(sim.positions, seg.positions);
    res.converged = coef.converged;
    res.n_iter = coef.n_iter;
    return res;
}

namespace {

struct TrajectoryOutput {
    std::vector<FitResult> fits;
    std::vector<SkipRecord> skips;
    std::vector<std::string> warnings;
    std::size_t n_segments = 0;
};

TrajectoryOutput fit_trajectory(const TrajectoryRecord& record, const FitConfig& cfg) {
    TrajectoryOutput out;
    const PairKey key = record.key();

    TrajectoryRecord rec = record;
    if (rec.sample_rate > cfg.target_rate * (1.0 + 1e-9)) {
        rec = downsample(rec, cfg.target_rate);
    }
    rec = center(rec);

    const std::size_t min_len = std::max<std::size_t>(3, static_cast<std::size_t>(cfg.dct_order));
    if (rec.size() < min_len) {
        out.skips.push_back({key, record.modality, -1, "smooth",
                             "trajectory has " + std::to_string(rec.size()) +
                                 " samples at the analysis rate, need " + std::to_string(min_len)});
        return out;
    }

    const SmoothedTrajectory smooth = dct_smooth(rec, cfg.dct_order);
    const auto segments = segment_gestures(smooth, cfg.min_samples, cfg.min_peak_vel);
    out.n_segments = segments.size();

    for (const GestureSegment& seg : segments) {
        try {
            const FeatureMatrix feat = build_features(seg);
            const CoefficientMatrix coef = fit_constrained_ls(feat);
            if (coef.condition > cfg.condition_warn) {
                out.warnings.push_back("ill-conditioned normal matrix (cond ~ " +
                                       std::to_string(coef.condition) + ") for " + to_string(key) +
                                       "/" + std::string(to_string(record.modality)) + " gesture " +
                                       std::to_string(seg.gesture_index));
            }
            out.fits.push_back(score_fit(seg, coef));
        } catch (const FitError& e) {
            out.skips.push_back({key, record.modality, seg.gesture_index, "fit", e.what()});
        }
    }
    return out;
}

TrajectoryOutput fit_pair(const RecordPair& pair, const FitConfig& cfg) {
    TrajectoryOutput ema = fit_trajectory(pair.ema, cfg);
    TrajectoryOutput us = fit_trajectory(pair.us, cfg);

    TrajectoryOutput merged;
    merged.fits = std::move(ema.fits);
    merged.fits.insert(merged.fits.end(), us.fits.begin(), us.fits.end());
    merged.skips = std::move(ema.skips);
    merged.skips.insert(merged.skips.end(), us.skips.begin(), us.skips.end());
    merged.warnings = std::move(ema.warnings);
    merged.warnings.insert(merged.warnings.end(), us.warnings.begin(), us.warnings.end());
    if (ema.n_segments != us.n_segments) {
        merged.warnings.push_back("gesture count differs for " + to_string(pair.key) + ": EMA " +
                                  std::to_string(ema.n_segments) + " vs US " +
                                  std::to_string(us.n_segments) +
                                  "; gestures matched by index only");
    }
    return merged;
}

}  // namespace

CorpusFitOutput fit_corpus(const std::vector<RecordPair>& pairs, const FitConfig& cfg) {
    std::vector<TrajectoryOutput> per_pair(pairs.size());

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || pairs.size() < 2) {
        for (std::size_t i = 0; i < pairs.size(); ++i) per_pair[i] = fit_pair(pairs[i], cfg);
    } else {
        const auto workers = static_cast<std::size_t>(
            std::min<std::size_t>(static_cast<std::size_t>(jobs), pairs.size()));
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w]() {
                try {
                    for (std::size_t i = w; i < pairs.size(); i += workers) {
                        per_pair[i] = fit_pair(pairs[i], cfg);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (const auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }

    CorpusFitOutput out;
    for (auto& po : per_pair) {
        out.fits.insert(out.fits.end(), po.fits.begin(), po.fits.end());
        out.skips.insert(out.skips.end(), po.skips.begin(), po.skips.end());
        out.warnings.insert(out.warnings.end(), po.warnings.begin(), po.warnings.end());
    }
    std::sort(out.fits.begin(), out.fits.end(), [](const FitResult& a, const FitResult& b) {
        return std::tie(a.key, a.modality, a.gesture_index) <
               std::tie(b.key, b.modality, b.gesture_index);
    });
    return out;
}

std::vector<SummaryRow> summarize_fits(const std::vector<FitResult>& fits) {
    std::map<std::pair<Channel, Modality>, std::vector<double>> groups;
    for (const FitResult& fit : fits) {
        if (fit.r2_vel.has_value()) {
            groups[{fit.key.channel, fit.modality}].push_back(*fit.r2_vel);
        }
    }

    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (const auto& [group, values] : groups) {
        SummaryRow row;
        row.variable = group.first.name();
        row.modality = group.second;
        row.n = values.size();
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                            static_cast<double>(values.size());
        row.r2_mean = mean;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        row.r2_sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
        row.r2_min = *std::min_element(values.begin(), values.end());
        row.r2_max = *std::max_element(values.begin(), values.end());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace oscfit
