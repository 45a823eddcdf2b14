#include "oscfit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "oscfit/errors.hpp"

namespace oscfit {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Gaussian priors of the model, log densities up to constants.
constexpr double kLocPriorVar = 4.0;  // alpha, beta ~ Normal(0, sd 2)

double log_scale_prior(double log_value) {
    // half-Normal(0, 2) on the natural scale plus the log-transform Jacobian.
    const double v = std::exp(log_value);
    return -v * v / 8.0 + log_value;
}

struct Groups {
    std::vector<std::vector<std::size_t>> by_speaker;  // all observations
    std::vector<std::vector<std::size_t>> by_word_us;  // modality-1 observations
    std::vector<std::size_t> us;                       // modality-1 observations
};

struct ChainState {
    double alpha = 0.0;
    double beta = 0.0;
    double lsig = 0.0;  // log sigma
    double lta = 0.0;   // log tau_alpha
    double ltb = 0.0;   // log tau_beta
    std::vector<double> z;  // speaker effects, unit scale
    std::vector<double> w;  // word slopes, unit scale
    std::vector<double> resid;
    double sum_r2 = 0.0;
};

class AdaptiveSteps {
public:
    AdaptiveSteps(std::size_t count, double init) : steps_(count, init), accepts_(count, 0) {}

    double step(std::size_t i) const { return steps_[i]; }
    void record(std::size_t i, bool accepted) {
        if (accepted) ++accepts_[i];
    }

    // Windowed multiplicative adaptation toward 20-50% acceptance.
    void adapt(int window) {
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            const double rate = static_cast<double>(accepts_[i]) / window;
            if (rate < 0.20) {
                steps_[i] *= 0.7;
            } else if (rate > 0.50) {
                steps_[i] *= 1.3;
            }
            steps_[i] = std::clamp(steps_[i], 1e-8, 1e4);
            accepts_[i] = 0;
        }
    }

private:
    std::vector<double> steps_;
    std::vector<int> accepts_;
};

struct Sampler {
    const std::vector<ComparisonObservation>& obs;
    const Groups& groups;
    std::size_t n_speakers;
    std::size_t n_words;
    std::mt19937_64 rng;
    std::normal_distribution<double> gauss{0.0, 1.0};
    std::uniform_real_distribution<double> unif{0.0, 1.0};
    ChainState st;
    AdaptiveSteps steps;

    // Step-size slots: scalars first, then the four ridge moves.
    enum : std::size_t { kAlpha = 0, kBeta, kLsig, kLta, kLtb, kScalarCount };
    std::size_t z_slot(std::size_t s) const { return kScalarCount + s; }
    std::size_t w_slot(std::size_t w) const { return kScalarCount + n_speakers + w; }
    std::size_t ridge_slot(std::size_t r) const {
        return kScalarCount + n_speakers + n_words + r;
    }

    Sampler(const std::vector<ComparisonObservation>& obs_, const Groups& groups_,
            std::size_t ns, std::size_t nw, double init_step, std::uint64_t chain_seed)
        : obs(obs_),
          groups(groups_),
          n_speakers(ns),
          n_words(nw),
          rng(chain_seed),
          steps(kScalarCount + ns + nw + 4, init_step) {}

    void init_state() {
        double ema_sum = 0.0, us_sum = 0.0;
        std::size_t ema_n = 0, us_n = 0;
        for (const auto& o : obs) {
            if (o.modality == 0) {
                ema_sum += o.y;
                ++ema_n;
            } else {
                us_sum += o.y;
                ++us_n;
            }
        }
        const double ema_mean = ema_sum / static_cast<double>(ema_n);
        const double us_mean = us_sum / static_cast<double>(us_n);
        double ss = 0.0;
        for (const auto& o : obs) {
            const double base = o.modality == 0 ? ema_mean : us_mean;
            ss += (o.y - base) * (o.y - base);
        }
        const double sd = std::sqrt(ss / static_cast<double>(obs.size())) + 1e-3;

        st.alpha = ema_mean + 0.3 * gauss(rng);
        st.beta = (us_mean - ema_mean) + 0.3 * gauss(rng);
        st.lsig = std::log(sd) + 0.3 * gauss(rng);
        st.lta = std::log(0.5) + 0.5 * gauss(rng);
        st.ltb = std::log(0.5) + 0.5 * gauss(rng);
        st.z.assign(n_speakers, 0.0);
        st.w.assign(n_words, 0.0);
        for (auto& v : st.z) v = 0.5 * gauss(rng);
        for (auto& v : st.w) v = 0.5 * gauss(rng);
        refresh_residuals();
    }

    void refresh_residuals() {
        const double ta = std::exp(st.lta);
        const double tb = std::exp(st.ltb);
        st.resid.resize(obs.size());
        st.sum_r2 = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            double mu = st.alpha + ta * st.z[obs[i].speaker];
            if (obs[i].modality == 1) mu += st.beta + tb * st.w[obs[i].word];
            st.resid[i] = obs[i].y - mu;
            st.sum_r2 += st.resid[i] * st.resid[i];
        }
    }

    bool accept(double dlogp) {
        if (dlogp >= 0.0) return true;
        return std::log(unif(rng)) < dlogp;  // NaN compares false: never accept
    }

    // Metropolis step for a location-like scalar whose change shifts mu by
    // delta_mu over the given subset. dlogp_prior covers everything except
    // the likelihood.
    template <typename IndexRange, typename MuShift>
    bool location_update(const IndexRange& subset, MuShift&& mu_shift, double dlogp_prior) {
        const double sigma2 = std::exp(2.0 * st.lsig);
        double d_sum2 = 0.0;
        for (const std::size_t i : subset) {
            const double r_new = st.resid[i] - mu_shift(i);
            d_sum2 += r_new * r_new - st.resid[i] * st.resid[i];
        }
        const double dlogp = -d_sum2 / (2.0 * sigma2) + dlogp_prior;
        if (!accept(dlogp)) return false;
        for (const std::size_t i : subset) st.resid[i] -= mu_shift(i);
        st.sum_r2 += d_sum2;
        return true;
    }

    struct AllIndices {
        std::size_t n;
        struct iterator {
            std::size_t i;
            std::size_t operator*() const { return i; }
            iterator& operator++() { ++i; return *this; }
            bool operator!=(const iterator& o) const { return i != o.i; }
        };
        iterator begin() const { return {0}; }
        iterator end() const { return {n}; }
    };

    void update_alpha() {
        const double delta = steps.step(kAlpha) * gauss(rng);
        const double a_new = st.alpha + delta;
        const double dprior = -(a_new * a_new - st.alpha * st.alpha) / (2.0 * kLocPriorVar);
        const bool ok = location_update(AllIndices{obs.size()}, [&](std::size_t) { return delta; },
                                        dprior);
        if (ok) st.alpha = a_new;
        steps.record(kAlpha, ok);
    }

    void update_beta() {
        const double delta = steps.step(kBeta) * gauss(rng);
        const double b_new = st.beta + delta;
        const double dprior = -(b_new * b_new - st.beta * st.beta) / (2.0 * kLocPriorVar);
        const bool ok =
            location_update(groups.us, [&](std::size_t) { return delta; }, dprior);
        if (ok) st.beta = b_new;
        steps.record(kBeta, ok);
    }

    void update_z(std::size_t s) {
        const double delta = steps.step(z_slot(s)) * gauss(rng);
        const double z_new = st.z[s] + delta;
        const double dprior = -(z_new * z_new - st.z[s] * st.z[s]) / 2.0;
        const double shift = std::exp(st.lta) * delta;
        const bool ok = location_update(groups.by_speaker[s],
                                        [&](std::size_t) { return shift; }, dprior);
        if (ok) st.z[s] = z_new;
        steps.record(z_slot(s), ok);
    }

    void update_w(std::size_t w) {
        const double delta = steps.step(w_slot(w)) * gauss(rng);
        const double w_new = st.w[w] + delta;
        const double dprior = -(w_new * w_new - st.w[w] * st.w[w]) / 2.0;
        const double shift = std::exp(st.ltb) * delta;
        const bool ok = location_update(groups.by_word_us[w],
                                        [&](std::size_t) { return shift; }, dprior);
        if (ok) st.w[w] = w_new;
        steps.record(w_slot(w), ok);
    }

    void update_lsig() {
        const double delta = steps.step(kLsig) * gauss(rng);
        const double l_new = st.lsig + delta;
        const auto n = static_cast<double>(obs.size());
        const double inv_old = std::exp(-2.0 * st.lsig);
        const double inv_new = std::exp(-2.0 * l_new);
        const double dlogp = -n * delta - 0.5 * st.sum_r2 * (inv_new - inv_old) +
                             log_scale_prior(l_new) - log_scale_prior(st.lsig);
        const bool ok = accept(dlogp);
        if (ok) st.lsig = l_new;
        steps.record(kLsig, ok);
    }

    void update_lta() {
        const double delta = steps.step(kLta) * gauss(rng);
        const double l_new = st.lta + delta;
        const double tau_diff = std::exp(l_new) - std::exp(st.lta);
        const double dprior = log_scale_prior(l_new) - log_scale_prior(st.lta);
        const bool ok = location_update(
            AllIndices{obs.size()}, [&](std::size_t i) { return tau_diff * st.z[obs[i].speaker]; },
            dprior);
        if (ok) st.lta = l_new;
        steps.record(kLta, ok);
    }

    void update_ltb() {
        const double delta = steps.step(kLtb) * gauss(rng);
        const double l_new = st.ltb + delta;
        const double tau_diff = std::exp(l_new) - std::exp(st.ltb);
        const double dprior = log_scale_prior(l_new) - log_scale_prior(st.ltb);
        const bool ok = location_update(
            groups.us, [&](std::size_t i) { return tau_diff * st.w[obs[i].word]; }, dprior);
        if (ok) st.ltb = l_new;
        steps.record(kLtb, ok);
    }

    // Likelihood-invariant ridge moves. The scalar updates above make tiny
    // conditional steps along alpha <-> mean(z) and tau <-> scale(z); these
    // moves traverse those ridges directly (mu is unchanged, so only prior
    // terms and, for the scale moves, the map Jacobian enter the ratio).
    void ridge_translate_alpha() {
        const std::size_t slot = ridge_slot(0);
        const double delta = steps.step(slot) * gauss(rng);
        const double tau = std::exp(st.lta);
        const double a_new = st.alpha + delta;
        double dlogp = -(a_new * a_new - st.alpha * st.alpha) / (2.0 * kLocPriorVar);
        for (const double z : st.z) {
            const double z_new = z - delta / tau;
            dlogp += -(z_new * z_new - z * z) / 2.0;
        }
        const bool ok = accept(dlogp);
        if (ok) {
            st.alpha = a_new;
            for (double& z : st.z) z -= delta / tau;
        }
        steps.record(slot, ok);
    }

    void ridge_translate_beta() {
        const std::size_t slot = ridge_slot(1);
        const double delta = steps.step(slot) * gauss(rng);
        const double tau = std::exp(st.ltb);
        const double b_new = st.beta + delta;
        double dlogp = -(b_new * b_new - st.beta * st.beta) / (2.0 * kLocPriorVar);
        for (const double w : st.w) {
            const double w_new = w - delta / tau;
            dlogp += -(w_new * w_new - w * w) / 2.0;
        }
        const bool ok = accept(dlogp);
        if (ok) {
            st.beta = b_new;
            for (double& w : st.w) w -= delta / tau;
        }
        steps.record(slot, ok);
    }

    void ridge_scale(double& log_tau, std::vector<double>& effects, std::size_t slot) {
        const double delta = steps.step(slot) * gauss(rng);
        const double l_new = log_tau + delta;
        const double shrink = std::exp(-delta);
        double dlogp = log_scale_prior(l_new) - log_scale_prior(log_tau) -
                       static_cast<double>(effects.size()) * delta;  // map Jacobian
        for (const double e : effects) {
            const double e_new = e * shrink;
            dlogp += -(e_new * e_new - e * e) / 2.0;
        }
        const bool ok = accept(dlogp);
        if (ok) {
            log_tau = l_new;
            for (double& e : effects) e *= shrink;
        }
        steps.record(slot, ok);
    }

    void sweep() {
        update_alpha();
        update_beta();
        update_lsig();
        update_lta();
        update_ltb();
        for (std::size_t s = 0; s < n_speakers; ++s) update_z(s);
        for (std::size_t w = 0; w < n_words; ++w) update_w(w);
        ridge_translate_alpha();
        ridge_translate_beta();
        ridge_scale(st.lta, st.z, ridge_slot(2));
        ridge_scale(st.ltb, st.w, ridge_slot(3));
    }
};

}  // namespace

const std::vector<std::vector<double>>& HierarchicalFit::draws_for(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return draws[i];
    }
    throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

const PosteriorSummary& HierarchicalFit::summary_for(std::string_view name) const {
    for (const auto& s : summaries) {
        if (s.name == name) return s;
    }
    throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

HierarchicalFit fit_hierarchical(const std::vector<ComparisonObservation>& observations,
                                 std::size_t n_speakers, std::size_t n_words,
                                 const McmcConfig& cfg) {
    if (n_speakers < 2 || n_words < 2) {
        throw DataError("degenerate grouping: need at least 2 speakers and 2 words, got " +
                        std::to_string(n_speakers) + " and " + std::to_string(n_words));
    }
    if (observations.empty()) throw DataError("no observations");
    if (cfg.chains < 1 || cfg.warmup < 1 || cfg.draws < 1) {
        throw std::invalid_argument("chains, warmup, draws must all be >= 1");
    }

    Groups groups;
    groups.by_speaker.resize(n_speakers);
    groups.by_word_us.resize(n_words);
    std::vector<bool> speaker_seen(n_speakers, false), word_seen(n_words, false);
    bool has_ema = false, has_us = false;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& o = observations[i];
        if (!std::isfinite(o.y)) throw DataError("non-finite observation value");
        if (o.speaker >= n_speakers || o.word >= n_words) {
            throw DataError("observation group index out of range");
        }
        if (o.modality != 0 && o.modality != 1) throw DataError("modality indicator must be 0 or 1");
        speaker_seen[o.speaker] = true;
        word_seen[o.word] = true;
        groups.by_speaker[o.speaker].push_back(i);
        if (o.modality == 1) {
            has_us = true;
            groups.us.push_back(i);
            groups.by_word_us[o.word].push_back(i);
        } else {
            has_ema = true;
        }
    }
    if (!has_ema || !has_us) throw DataError("both modalities must be present");
    if (std::find(speaker_seen.begin(), speaker_seen.end(), false) != speaker_seen.end() ||
        std::find(word_seen.begin(), word_seen.end(), false) != word_seen.end()) {
        throw DataError("group indices must be dense (every speaker and word observed)");
    }

    HierarchicalFit fit;
    fit.n_speakers = n_speakers;
    fit.n_words = n_words;
    fit.names = {"alpha", "beta", "sigma", "tau_alpha", "tau_beta"};
    for (std::size_t s = 0; s < n_speakers; ++s) fit.names.push_back("alpha_s[" + std::to_string(s) + "]");
    for (std::size_t w = 0; w < n_words; ++w) fit.names.push_back("beta_w[" + std::to_string(w) + "]");
    const std::size_t n_params = fit.names.size();
    fit.draws.assign(n_params, std::vector<std::vector<double>>(
                                   static_cast<std::size_t>(cfg.chains),
                                   std::vector<double>(static_cast<std::size_t>(cfg.draws))));

    constexpr int kAdaptWindow = 50;
    for (int chain = 0; chain < cfg.chains; ++chain) {
        Sampler sampler(observations, groups, n_speakers, n_words, cfg.init_step,
                        mix64(cfg.seed ^ (0xC0FFEEULL + static_cast<std::uint64_t>(chain))));
        sampler.init_state();

        for (int it = 0; it < cfg.warmup; ++it) {
            sampler.sweep();
            if ((it + 1) % kAdaptWindow == 0) sampler.steps.adapt(kAdaptWindow);
            if ((it + 1) % 100 == 0) sampler.refresh_residuals();
        }
        for (int it = 0; it < cfg.draws; ++it) {
            sampler.sweep();
            if ((it + 1) % 100 == 0) sampler.refresh_residuals();
            const ChainState& st = sampler.st;
            const double ta = std::exp(st.lta);
            const double tb = std::exp(st.ltb);
            const auto ci = static_cast<std::size_t>(chain);
            const auto ii = static_cast<std::size_t>(it);
            fit.draws[0][ci][ii] = st.alpha;
            fit.draws[1][ci][ii] = st.beta;
            fit.draws[2][ci][ii] = std::exp(st.lsig);
            fit.draws[3][ci][ii] = ta;
            fit.draws[4][ci][ii] = tb;
            for (std::size_t s = 0; s < n_speakers; ++s) fit.draws[5 + s][ci][ii] = ta * st.z[s];
            for (std::size_t w = 0; w < n_words; ++w) {
                fit.draws[5 + n_speakers + w][ci][ii] = tb * st.w[w];
            }
        }
    }

    fit.summaries.reserve(n_params);
    for (std::size_t p = 0; p < n_params; ++p) {
        std::vector<double> pooled;
        pooled.reserve(static_cast<std::size_t>(cfg.chains) * cfg.draws);
        for (const auto& chain : fit.draws[p]) pooled.insert(pooled.end(), chain.begin(), chain.end());

        PosteriorSummary s;
        s.name = fit.names[p];
        s.mean = mean_of(pooled);
        s.ci_low = quantile(pooled, 0.025);
        s.ci_high = quantile(pooled, 0.975);
        s.rhat = split_rhat(fit.draws[p]);
        s.ess = effective_sample_size(fit.draws[p]);
        if (s.rhat > 1.05) fit.converged = false;
        fit.summaries.push_back(std::move(s));
    }
    return fit;
}

std::vector<WordEffect> word_effects(const HierarchicalFit& fit,
                                     const std::vector<std::string>& word_labels) {
    if (word_labels.size() != fit.n_words) {
        throw std::invalid_argument("word label count does not match the fitted model");
    }
    const auto& beta = fit.draws_for("beta");

    std::vector<WordEffect> out;
    out.reserve(fit.n_words);
    for (std::size_t w = 0; w < fit.n_words; ++w) {
        const auto& slope = fit.draws[5 + fit.n_speakers + w];
        std::vector<double> effect;
        for (std::size_t c = 0; c < beta.size(); ++c) {
            for (std::size_t i = 0; i < beta[c].size(); ++i) {
                effect.push_back(beta[c][i] + slope[c][i]);
            }
        }
        WordEffect we;
        we.word = word_labels[w];
        we.mean = mean_of(effect);
        we.ci_low = quantile(effect, 0.025);
        we.ci_high = quantile(effect, 0.975);
        out.push_back(std::move(we));
    }
    std::sort(out.begin(), out.end(),
              [](const WordEffect& a, const WordEffect& b) { return a.word < b.word; });
    return out;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson_r: length mismatch");
    if (a.size() < 3) throw std::invalid_argument("pearson_r: need at least 3 points");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw DataError("pearson_r: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

struct SplitChains {
    std::vector<std::vector<double>> halves;
    std::vector<double> means;
    std::vector<double> vars;  // within-chain sample variance (n-1 divisor)
    std::size_t len = 0;
    double w = 0.0;
    double var_plus = 0.0;
    bool degenerate = false;
};

SplitChains prepare_split(const std::vector<std::vector<double>>& chains) {
    SplitChains sc;
    std::size_t min_len = SIZE_MAX;
    for (const auto& c : chains) min_len = std::min(min_len, c.size());
    if (chains.empty() || min_len < 4) {
        sc.degenerate = true;
        return sc;
    }
    sc.len = min_len / 2;
    for (const auto& c : chains) {
        sc.halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(sc.len));
        sc.halves.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(sc.len),
                               c.begin() + static_cast<std::ptrdiff_t>(2 * sc.len));
    }
    const auto m = sc.halves.size();
    const auto n = static_cast<double>(sc.len);
    for (const auto& h : sc.halves) {
        const double mu = mean_of(h);
        double ss = 0.0;
        for (double v : h) ss += (v - mu) * (v - mu);
        sc.means.push_back(mu);
        sc.vars.push_back(ss / (n - 1.0));
    }
    sc.w = mean_of(sc.vars);
    const double grand = mean_of(sc.means);
    double b_over_n = 0.0;
    for (double mu : sc.means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= static_cast<double>(m - 1);
    sc.var_plus = (n - 1.0) / n * sc.w + b_over_n;
    if (sc.w <= 0.0 || sc.var_plus <= 0.0) sc.degenerate = true;
    return sc;
}

double autocov(const std::vector<double>& x, double mu, std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) {
        acc += (x[i] - mu) * (x[i + lag] - mu);
    }
    return acc / static_cast<double>(x.size());
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
    const SplitChains sc = prepare_split(chains);
    if (sc.degenerate) return 1.0;
    return std::sqrt(sc.var_plus / sc.w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    const SplitChains sc = prepare_split(chains);
    const double total = static_cast<double>(sc.halves.size()) * static_cast<double>(sc.len);
    if (sc.degenerate) {
        double count = 0.0;
        for (const auto& c : chains) count += static_cast<double>(c.size());
        return count;
    }

    const auto rho_at = [&](std::size_t lag) {
        double mean_cov = 0.0;
        for (std::size_t j = 0; j < sc.halves.size(); ++j) {
            mean_cov += autocov(sc.halves[j], sc.means[j], lag);
        }
        mean_cov /= static_cast<double>(sc.halves.size());
        return 1.0 - (sc.w - mean_cov) / sc.var_plus;
    };

    // Geyer initial monotone positive sequence over paired lags.
    double tau = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0;; ++k) {
        const std::size_t even = 2 * k;
        const std::size_t odd = even + 1;
        if (odd + 1 >= sc.len) break;
        double pair = rho_at(even) + rho_at(odd);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += pair;
    }
    const double tau_total = std::max(2.0 * tau - 1.0, 1.0 / static_cast<double>(sc.len));
    return std::min(total / tau_total, total);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    q = std::clamp(q, 0.0, 1.0);
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

}  // namespace oscfit
