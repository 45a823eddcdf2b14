#include "oscfit/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "oscfit/errors.hpp"

namespace oscfit {

std::string_view to_string(DampingClass c) {
    switch (c) {
        case DampingClass::Underdamped: return "underdamped";
        case DampingClass::Critical: return "critical";
        case DampingClass::Overdamped: return "overdamped";
    }
    return "underdamped";
}

DampingClass damping_class_from_string(std::string_view s) {
    if (s == "underdamped") return DampingClass::Underdamped;
    if (s == "critical") return DampingClass::Critical;
    if (s == "overdamped") return DampingClass::Overdamped;
    throw DataError("unknown damping class '" + std::string(s) + "'");
}

DampingClass OscillatorParams::damping_class() const {
    const double bb = b * b;
    const double fourk = 4.0 * k;
    const double scale = std::max(std::abs(bb), std::abs(fourk));
    if (std::abs(bb - fourk) <= 1e-9 * scale) return DampingClass::Critical;
    return bb < fourk ? DampingClass::Underdamped : DampingClass::Overdamped;
}

double critical_damping(double k) {
    if (k < 0.0) throw std::invalid_argument("critical_damping: k must be >= 0");
    return 2.0 * std::sqrt(k);
}

Motion solve_analytic(const OscillatorParams& p, double x0, double v0,
                      std::span<const double> times) {
    if (!(p.k > 0.0)) {
        throw NonAttractorError("solve_analytic: k must be > 0, got " + std::to_string(p.k));
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] < times[i - 1]) {
            throw std::invalid_argument("solve_analytic: times must be non-decreasing");
        }
    }

    Motion out;
    out.positions.resize(times.size());
    out.velocities.resize(times.size());

    // Solve u" + b u' + k u = 0 for u = x - T.
    const double u0 = x0 - p.T;
    const double lambda = -0.5 * p.b;

    switch (p.damping_class()) {
        case DampingClass::Underdamped: {
            const double omega = std::sqrt(p.k - 0.25 * p.b * p.b);
            const double a = u0;
            const double c = (v0 - lambda * u0) / omega;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const double t = times[i];
                const double e = std::exp(lambda * t);
                const double cs = std::cos(omega * t);
                const double sn = std::sin(omega * t);
                out.positions[i] = p.T + e * (a * cs + c * sn);
                out.velocities[i] =
                    e * ((lambda * a + omega * c) * cs + (lambda * c - omega * a) * sn);
            }
            break;
        }
        case DampingClass::Critical: {
            const double c1 = u0;
            const double c2 = v0 - lambda * u0;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const double t = times[i];
                const double e = std::exp(lambda * t);
                out.positions[i] = p.T + (c1 + c2 * t) * e;
                out.velocities[i] = (c2 + lambda * (c1 + c2 * t)) * e;
            }
            break;
        }
        case DampingClass::Overdamped: {
            const double disc = std::sqrt(0.25 * p.b * p.b - p.k);
            const double r1 = lambda + disc;
            const double r2 = lambda - disc;
            const double c1 = (v0 - r2 * u0) / (r1 - r2);
            const double c2 = u0 - c1;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const double t = times[i];
                const double e1 = std::exp(r1 * t);
                const double e2 = std::exp(r2 * t);
                out.positions[i] = p.T + c1 * e1 + c2 * e2;
                out.velocities[i] = c1 * r1 * e1 + c2 * r2 * e2;
            }
            break;
        }
    }
    return out;
}

Motion integrate_rk4(const OscillatorParams& p, double x0, double v0, double sample_rate,
                     std::size_t n_steps) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("integrate_rk4: sample_rate must be > 0");
    if (n_steps < 1) throw std::invalid_argument("integrate_rk4: n_steps must be >= 1");

    const double h = 1.0 / sample_rate;
    const auto accel = [&p](double x, double v) { return -p.b * v - p.k * (x - p.T); };

    Motion out;
    out.positions.reserve(n_steps + 1);
    out.velocities.reserve(n_steps + 1);

    SimState s{x0, v0, 0.0};
    out.positions.push_back(s.x);
    out.velocities.push_back(s.v);
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double k1x = s.v;
        const double k1v = accel(s.x, s.v);
        const double k2x = s.v + 0.5 * h * k1v;
        const double k2v = accel(s.x + 0.5 * h * k1x, s.v + 0.5 * h * k1v);
        const double k3x = s.v + 0.5 * h * k2v;
        const double k3v = accel(s.x + 0.5 * h * k2x, s.v + 0.5 * h * k2v);
        const double k4x = s.v + h * k3v;
        const double k4v = accel(s.x + h * k3x, s.v + h * k3v);
        s.x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        s.v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        s.t += h;
        if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
            throw std::runtime_error("integrate_rk4: state blew up at step " +
                                     std::to_string(step + 1));
        }
        out.positions.push_back(s.x);
        out.velocities.push_back(s.v);
    }
    return out;
}

TrajectoryRecord synth_gesture(const OscillatorParams& p, double x0, double v0,
                               double sample_rate, double duration, double noise_sd,
                               std::uint64_t seed) {
    if (noise_sd < 0.0) throw std::invalid_argument("synth_gesture: noise_sd must be >= 0");
    if (!(sample_rate > 0.0)) throw std::invalid_argument("synth_gesture: sample_rate must be > 0");

    const auto n = static_cast<std::size_t>(std::floor(duration * sample_rate + 1e-9)) + 1;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) / sample_rate;

    const Motion clean = solve_analytic(p, x0, v0, times);

    TrajectoryRecord rec;
    rec.sample_rate = sample_rate;
    rec.t0 = 0.0;
    rec.positions = clean.positions;
    if (noise_sd > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sd);
        for (double& x : rec.positions) x += noise(rng);
    }
    return rec;
}

namespace {

// splitmix64: decorrelates per-token seeds derived from (seed, indices).
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string indexed_label(const char* prefix, int i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i + 1);
    return buf;
}

}  // namespace

std::vector<SynthToken> synth_corpus(const SynthConfig& cfg) {
    if (cfg.speakers < 1 || cfg.words < 1 || cfg.reps < 1) {
        throw std::invalid_argument("synth_corpus: speakers, words, reps must be >= 1");
    }
    if (!(cfg.k_min > 0.0) || cfg.k_max < cfg.k_min || cfg.b_min < 0.0 || cfg.b_max < cfg.b_min ||
        cfg.amp_min <= 0.0 || cfg.amp_max < cfg.amp_min || cfg.t_max < cfg.t_min ||
        !(cfg.span_frac > 0.0)) {
        throw std::invalid_argument("synth_corpus: invalid parameter ranges");
    }

    // Word-level base parameters, fixed by the seed independently of corpus size.
    struct WordBase {
        double k, b, T, amp;
    };
    std::vector<WordBase> bases(static_cast<std::size_t>(cfg.words));
    {
        std::mt19937_64 rng(mix64(cfg.seed ^ 0x776f726473ULL));
        std::uniform_real_distribution<double> uk(cfg.k_min, cfg.k_max);
        std::uniform_real_distribution<double> ub(cfg.b_min, cfg.b_max);
        std::uniform_real_distribution<double> ut(cfg.t_min, cfg.t_max);
        std::uniform_real_distribution<double> ua(cfg.amp_min, cfg.amp_max);
        std::uniform_real_distribution<double> usign(0.0, 1.0);
        for (auto& w : bases) {
            w.k = uk(rng);
            w.b = ub(rng);
            w.T = ut(rng);
            w.amp = ua(rng) * (usign(rng) < 0.5 ? -1.0 : 1.0);
        }
    }

    std::vector<SynthToken> tokens;
    tokens.reserve(static_cast<std::size_t>(cfg.speakers) * cfg.words * cfg.reps * 2);
    for (int s = 0; s < cfg.speakers; ++s) {
        for (int w = 0; w < cfg.words; ++w) {
            for (int r = 0; r < cfg.reps; ++r) {
                const std::uint64_t token_seed =
                    mix64(cfg.seed ^ mix64((std::uint64_t(s) << 40) ^ (std::uint64_t(w) << 20) ^
                                           std::uint64_t(r)));
                std::mt19937_64 rng(token_seed);
                std::normal_distribution<double> jitter(0.0, 1.0);

                const WordBase& base = bases[static_cast<std::size_t>(w)];
                OscillatorParams truth;
                truth.k = base.k * (1.0 + 0.05 * jitter(rng));
                truth.b = base.b * (1.0 + 0.05 * jitter(rng));
                truth.T = base.T + 0.2 * jitter(rng);
                truth.k = std::max(truth.k, cfg.k_min * 0.5);
                truth.b = std::max(truth.b, 0.5 * cfg.b_min);
                const double amp = base.amp * (1.0 + 0.1 * jitter(rng));

                // Sample a window inside the first velocity half-cycle,
                // starting after release so the boundary velocities stay
                // well clear of zero.
                double span;
                if (truth.b * truth.b < 4.0 * truth.k) {
                    const double omega = std::sqrt(truth.k - 0.25 * truth.b * truth.b);
                    span = M_PI / omega;
                } else {
                    span = 3.0 / truth.b;
                }
                const double t_lead = 0.08 * span;
                const double duration = cfg.span_frac * span;

                for (const Modality modality : {Modality::EMA, Modality::US}) {
                    OscillatorParams p = truth;
                    if (modality == Modality::US) p.T += cfg.us_t_offset;
                    const std::vector<double> lead = {t_lead};
                    const Motion at_start = solve_analytic(p, p.T + amp, 0.0, lead);
                    const double rate = modality == Modality::EMA ? cfg.ema_rate : cfg.us_rate;
                    const std::uint64_t noise_seed =
                        mix64(token_seed ^ (modality == Modality::US ? 0x5553ULL : 0x454d41ULL));

                    SynthToken tok;
                    tok.truth = p;
                    tok.record = synth_gesture(p, at_start.positions[0], at_start.velocities[0],
                                               rate, duration, cfg.noise_sd, noise_seed);
                    tok.record.speaker = indexed_label("s", s);
                    tok.record.word = indexed_label("w", w);
                    tok.record.modality = modality;
                    tok.record.channel = Channel::parse(cfg.channel);
                    tok.record.repetition = r;
                    tokens.push_back(std::move(tok));
                }
            }
        }
    }
    return tokens;
}

}  // namespace oscfit
