#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oscfit/errors.hpp"
#include "oscfit/stats.hpp"

using namespace oscfit;

namespace {

struct SimTruth {
    double alpha = 0.0;
    double beta = 2.0;
    double sigma = 0.5;
    double tau_alpha = 1.0;
    double tau_beta = 0.5;
};

// Observations generated from the hierarchical model itself: S speakers,
// W words, `reps` tokens per (speaker, word, modality).
std::vector<ComparisonObservation> simulate(const SimTruth& truth, std::size_t S, std::size_t W,
                                            int reps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> a_s(S), b_w(W);
    for (auto& v : a_s) v = truth.tau_alpha * gauss(rng);
    for (auto& v : b_w) v = truth.tau_beta * gauss(rng);

    std::vector<ComparisonObservation> obs;
    obs.reserve(S * W * static_cast<std::size_t>(reps) * 2);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t w = 0; w < W; ++w) {
            for (int r = 0; r < reps; ++r) {
                for (int m = 0; m < 2; ++m) {
                    ComparisonObservation o;
                    o.speaker = s;
                    o.word = w;
                    o.modality = m;
                    o.y = truth.alpha + a_s[s] + (truth.beta + b_w[w]) * m +
                          truth.sigma * gauss(rng);
                    obs.push_back(o);
                }
            }
        }
    }
    return obs;
}

McmcConfig fast_config(std::uint64_t seed) {
    McmcConfig cfg;
    cfg.chains = 2;
    cfg.warmup = 400;
    cfg.draws = 600;
    cfg.seed = seed;
    return cfg;
}

double mcse(const HierarchicalFit& fit, const char* name) {
    const auto& chains = fit.draws_for(name);
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    double ss = 0.0;
    for (double v : pooled) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(pooled.size() - 1));
    return sd / std::sqrt(fit.summary_for(name).ess);
}

}  // namespace

TEST_CASE("pearson_r: closed-form cases") {
    const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    CHECK(pearson_r(a, a) == doctest::Approx(1.0));

    std::vector<double> neg = a;
    for (double& v : neg) v = -v;
    CHECK(pearson_r(a, neg) == doctest::Approx(-1.0));

    // Direct evaluation of the closed form for b = {1,2,3,5}.
    const std::vector<double> b = {1.0, 2.0, 3.0, 5.0};
    const double ma = 2.5, mb = 2.75;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    const double expected = sab / std::sqrt(saa * sbb);
    CHECK(pearson_r(a, b) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(pearson_r(b, a) == doctest::Approx(pearson_r(a, b)).epsilon(1e-15));
}

TEST_CASE("pearson_r error paths") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson_r(a, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pearson_r(a, std::vector<double>{5.0, 5.0, 5.0}), DataError);
}

TEST_CASE("split_rhat: well-mixed iid chains sit near 1") {
    std::mt19937_64 rng(314);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> chains(4, std::vector<double>(2000));
    for (auto& c : chains) {
        for (double& v : c) v = gauss(rng);
    }
    const double rhat = split_rhat(chains);
    CHECK(rhat >= 0.99);
    CHECK(rhat <= 1.02);
    const double ess = effective_sample_size(chains);
    CHECK(ess > 4000.0);  // iid draws: near the full 8000
    CHECK(ess <= 8000.0);
}

TEST_CASE("split_rhat: diverged chains are flagged high") {
    std::mt19937_64 rng(315);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> chains(4, std::vector<double>(500));
    for (std::size_t j = 0; j < chains.size(); ++j) {
        for (double& v : chains[j]) v = gauss(rng) + 5.0 * static_cast<double>(j);
    }
    CHECK(split_rhat(chains) > 1.5);
}

TEST_CASE("split_rhat: constant chains degrade gracefully") {
    const std::vector<std::vector<double>> chains(4, std::vector<double>(100, 3.25));
    CHECK(split_rhat(chains) == 1.0);
}

TEST_CASE("quantile: linear interpolation") {
    const std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("fit_hierarchical: validation") {
    const auto obs = simulate(SimTruth{}, 3, 4, 2, 1);
    CHECK_THROWS_AS(fit_hierarchical(obs, 1, 4, fast_config(1)), DataError);
    CHECK_THROWS_AS(fit_hierarchical(obs, 3, 1, fast_config(1)), DataError);

    auto ema_only = obs;
    ema_only.erase(std::remove_if(ema_only.begin(), ema_only.end(),
                                  [](const ComparisonObservation& o) { return o.modality == 1; }),
                   ema_only.end());
    CHECK_THROWS_AS(fit_hierarchical(ema_only, 3, 4, fast_config(1)), DataError);

    auto sparse = obs;
    for (auto& o : sparse) o.speaker = 0;  // speaker index 1,2 never observed
    CHECK_THROWS_AS(fit_hierarchical(sparse, 3, 4, fast_config(1)), DataError);
}

TEST_CASE("fit_hierarchical: deterministic under a fixed seed") {
    const auto obs = simulate(SimTruth{}, 4, 6, 2, 11);
    McmcConfig cfg = fast_config(77);
    cfg.chains = 2;
    cfg.warmup = 150;
    cfg.draws = 200;
    const auto a = fit_hierarchical(obs, 4, 6, cfg);
    const auto b = fit_hierarchical(obs, 4, 6, cfg);
    for (std::size_t p = 0; p < a.draws.size(); ++p) {
        for (std::size_t c = 0; c < a.draws[p].size(); ++c) {
            CHECK(a.draws[p][c] == b.draws[p][c]);
        }
    }
    cfg.seed = 78;
    const auto c = fit_hierarchical(obs, 4, 6, cfg);
    CHECK(a.draws[0][0] != c.draws[0][0]);
}

TEST_CASE("fit_hierarchical: generate-and-recover at the paper's scale") {
    SimTruth truth;
    const auto obs = simulate(truth, 6, 29, 4, 2025);
    McmcConfig cfg;  // full defaults: 4 chains, 1000 warmup, 2000 draws
    cfg.seed = 99;
    const auto fit = fit_hierarchical(obs, 6, 29, cfg);

    const auto& beta = fit.summary_for("beta");
    CHECK(std::abs(beta.mean - truth.beta) < 0.15);
    CHECK(beta.ci_low < truth.beta);
    CHECK(beta.ci_high > truth.beta);

    const auto& sigma = fit.summary_for("sigma");
    CHECK(std::abs(sigma.mean - truth.sigma) < 0.05);

    for (const auto& s : fit.summaries) {
        CHECK(s.rhat < 1.05);
        CHECK(s.ci_low <= s.mean);
        CHECK(s.mean <= s.ci_high);
        CHECK(s.ess > 50.0);
    }
    CHECK(fit.converged);
}

TEST_CASE("fit_hierarchical: identical y across modalities concentrates beta at 0") {
    std::vector<ComparisonObservation> obs;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t w = 0; w < 8; ++w) {
            for (int r = 0; r < 3; ++r) {
                const double y = gauss(rng);
                obs.push_back({y, s, w, 0});
                obs.push_back({y, s, w, 1});
            }
        }
    }
    McmcConfig cfg = fast_config(5);
    cfg.chains = 4;
    cfg.warmup = 600;
    cfg.draws = 1000;
    const auto fit = fit_hierarchical(obs, 4, 8, cfg);
    CHECK(std::abs(fit.summary_for("beta").mean) < 0.05);
}

TEST_CASE("fit_hierarchical: location invariance and label swap") {
    SimTruth truth;
    truth.beta = 1.0;
    const auto obs = simulate(truth, 5, 10, 3, 303);
    McmcConfig cfg;
    cfg.chains = 4;
    cfg.warmup = 600;
    cfg.draws = 1000;
    cfg.seed = 17;
    const auto base = fit_hierarchical(obs, 5, 10, cfg);

    SUBCASE("adding c to every y shifts alpha by c and leaves beta") {
        const double c = 3.7;
        auto shifted = obs;
        for (auto& o : shifted) o.y += c;
        const auto fit = fit_hierarchical(shifted, 5, 10, cfg);
        const double tol_a = 3.0 * (mcse(base, "alpha") + mcse(fit, "alpha"));
        const double tol_b = 3.0 * (mcse(base, "beta") + mcse(fit, "beta"));
        CHECK(std::abs(fit.summary_for("alpha").mean - base.summary_for("alpha").mean - c) <
              tol_a);
        CHECK(std::abs(fit.summary_for("beta").mean - base.summary_for("beta").mean) < tol_b);
    }

    SUBCASE("swapping modality labels flips the sign of beta") {
        auto swapped = obs;
        for (auto& o : swapped) o.modality = 1 - o.modality;
        const auto fit = fit_hierarchical(swapped, 5, 10, cfg);
        const double tol = 3.0 * (mcse(base, "beta") + mcse(fit, "beta"));
        CHECK(std::abs(fit.summary_for("beta").mean + base.summary_for("beta").mean) < tol);
    }
}

TEST_CASE("word_effects: summaries per word, sorted, recover an injected offset") {
    SimTruth truth;
    truth.beta = 0.0;
    truth.tau_beta = 0.05;
    auto obs = simulate(truth, 4, 6, 4, 41);
    // Word 2 gets a +1 modality offset on top of the (near-zero) slopes.
    for (auto& o : obs) {
        if (o.word == 2 && o.modality == 1) o.y += 1.0;
    }
    McmcConfig cfg;
    cfg.chains = 4;
    cfg.warmup = 600;
    cfg.draws = 1000;
    cfg.seed = 7;
    const auto fit = fit_hierarchical(obs, 4, 6, cfg);
    const std::vector<std::string> labels = {"wa", "wb", "wc", "wd", "we", "wf"};
    const auto effects = word_effects(fit, labels);
    REQUIRE(effects.size() == 6);
    for (std::size_t i = 1; i < effects.size(); ++i) CHECK(effects[i - 1].word < effects[i].word);

    double others = 0.0;
    double injected = 0.0;
    for (const auto& e : effects) {
        if (e.word == "wc") {
            injected = e.mean;
        } else {
            others += e.mean / 5.0;
        }
    }
    CHECK(injected - others > 0.6);
    CHECK(injected - others < 1.4);
}

TEST_CASE("word_effects: zero slopes collapse to beta's summary") {
    HierarchicalFit fit;
    fit.n_speakers = 2;
    fit.n_words = 2;
    fit.names = {"alpha", "beta", "sigma", "tau_alpha", "tau_beta",
                 "alpha_s[0]", "alpha_s[1]", "beta_w[0]", "beta_w[1]"};
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss(1.5, 0.3);
    fit.draws.assign(9, std::vector<std::vector<double>>(2, std::vector<double>(500, 0.0)));
    for (auto& chain : fit.draws[1]) {
        for (double& v : chain) v = gauss(rng);
    }
    const auto effects = word_effects(fit, {"w1", "w2"});
    std::vector<double> pooled;
    for (const auto& c : fit.draws[1]) pooled.insert(pooled.end(), c.begin(), c.end());
    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    for (const auto& e : effects) {
        CHECK(e.mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(e.ci_low == doctest::Approx(quantile(pooled, 0.025)).epsilon(1e-12));
        CHECK(e.ci_high == doctest::Approx(quantile(pooled, 0.975)).epsilon(1e-12));
    }
}
