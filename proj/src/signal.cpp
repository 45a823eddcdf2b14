#include "oscfit/signal.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oscfit {

TrajectoryRecord downsample(const TrajectoryRecord& record, double target_rate) {
    if (!(target_rate > 0.0)) throw std::invalid_argument("downsample: target_rate must be > 0");
    if (target_rate > record.sample_rate) {
        throw std::invalid_argument("downsample: refusing to upsample (target " +
                                    std::to_string(target_rate) + " Hz > source " +
                                    std::to_string(record.sample_rate) + " Hz)");
    }

    const std::size_t n_in = record.positions.size();
    const double step = record.sample_rate / target_rate;  // >= 1 source samples per output
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor(static_cast<double>(n_in - 1) / step + 1e-9)) + 1;

    TrajectoryRecord out = record;
    out.sample_rate = target_rate;
    out.positions.assign(n_out, 0.0);
    for (std::size_t j = 0; j < n_out; ++j) {
        const double u = std::min(static_cast<double>(j) * step, static_cast<double>(n_in - 1));
        const auto i = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(i);
        out.positions[j] = frac == 0.0 ? record.positions[i]
                                       : (1.0 - frac) * record.positions[i] +
                                             frac * record.positions[i + 1];
    }
    return out;
}

TrajectoryRecord center(const TrajectoryRecord& record) {
    TrajectoryRecord out = record;
    if (out.positions.empty()) return out;
    const double mean = std::accumulate(out.positions.begin(), out.positions.end(), 0.0) /
                        static_cast<double>(out.positions.size());
    for (double& x : out.positions) x -= mean;
    return out;
}

std::vector<double> differentiate(std::span<const double> values, double sample_rate) {
    const std::size_t n = values.size();
    if (n < 3) throw std::invalid_argument("differentiate: need at least 3 samples");

    std::vector<double> d(n);
    d[0] = (values[1] - values[0]) * sample_rate;
    d[n - 1] = (values[n - 1] - values[n - 2]) * sample_rate;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = (values[i + 1] - values[i - 1]) * sample_rate * 0.5;
    }
    return d;
}

namespace {

// Projection onto the first `order` DCT-II basis vectors
// phi_k(i) = s_k cos(pi (2i+1) k / (2N)), with orthonormal scaling
// s_0 = sqrt(1/N), s_k = sqrt(2/N). Computing only the retained
// coefficients keeps this O(N * order).
std::vector<double> dct_project(std::span<const double> x, int order) {
    const std::size_t n = x.size();
    const auto nd = static_cast<double>(n);
    std::vector<double> coeff(static_cast<std::size_t>(order), 0.0);
    for (int k = 0; k < order; ++k) {
        double acc = 0.0;
        const double w = M_PI * static_cast<double>(k) / (2.0 * nd);
        for (std::size_t i = 0; i < n; ++i) {
            acc += x[i] * std::cos(w * static_cast<double>(2 * i + 1));
        }
        coeff[static_cast<std::size_t>(k)] = acc * (k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd));
    }

    std::vector<double> rec(n, 0.0);
    for (int k = 0; k < order; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
        const double w = M_PI * static_cast<double>(k) / (2.0 * nd);
        const double cs = s * coeff[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < n; ++i) {
            rec[i] += cs * std::cos(w * static_cast<double>(2 * i + 1));
        }
    }
    return rec;
}

}  // namespace

SmoothedTrajectory dct_smooth(const TrajectoryRecord& record, int order) {
    if (order < 1) throw std::invalid_argument("dct_smooth: order must be >= 1");
    if (static_cast<std::size_t>(order) > record.positions.size()) {
        throw std::invalid_argument("dct_smooth: order " + std::to_string(order) +
                                    " exceeds sample count " +
                                    std::to_string(record.positions.size()));
    }

    SmoothedTrajectory out;
    out.base = record;
    out.dct_order = order;
    out.smoothed = dct_project(record.positions, order);
    out.velocity = differentiate(out.smoothed, record.sample_rate);
    out.acceleration = differentiate(out.velocity, record.sample_rate);
    return out;
}

}  // namespace oscfit
