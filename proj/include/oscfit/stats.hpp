#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oscfit {

// One parameter value (T, k, or b) for one gesture fit, with dense group
// indices. EMA is the baseline modality (indicator 0).
struct ComparisonObservation {
    double y = 0.0;
    std::size_t speaker = 0;  // 0..S-1
    std::size_t word = 0;     // 0..W-1
    int modality = 0;         // 0 = EMA, 1 = US
};

struct McmcConfig {
    int chains = 4;
    int warmup = 1000;
    int draws = 2000;
    double init_step = 0.1;
    std::uint64_t seed = 0;
};

struct PosteriorSummary {
    std::string name;
    double mean = 0.0;
    double ci_low = 0.0;   // 2.5% quantile
    double ci_high = 0.0;  // 97.5% quantile
    double rhat = 0.0;
    double ess = 0.0;
};

struct HierarchicalFit {
    std::vector<std::string> names;
    // draws[param][chain][iteration], natural scale
    std::vector<std::vector<std::vector<double>>> draws;
    std::vector<PosteriorSummary> summaries;
    std::size_t n_speakers = 0;
    std::size_t n_words = 0;
    bool converged = true;  // every R-hat <= 1.05

    const std::vector<std::vector<double>>& draws_for(std::string_view name) const;
    const PosteriorSummary& summary_for(std::string_view name) const;
};

// Posterior sampling for
//   y_i ~ Normal(alpha + alpha_s[s_i] + (beta + beta_w[w_i]) * modality_i, sigma)
// with alpha, beta ~ Normal(0, 2), alpha_s ~ Normal(0, tau_alpha),
// beta_w ~ Normal(0, tau_beta), and sigma, tau_alpha, tau_beta ~
// half-Normal(0, 2). Random effects use a non-centered parameterization.
// The sampler is adaptive random-walk Metropolis-within-Gibbs with extra
// reparameterization moves along the intercept/slope and scale ridges;
// step sizes start at cfg.init_step and adapt to 20-50% acceptance during
// warm-up. Deterministic for a fixed seed.
HierarchicalFit fit_hierarchical(const std::vector<ComparisonObservation>& observations,
                                 std::size_t n_speakers, std::size_t n_words,
                                 const McmcConfig& cfg);

struct WordEffect {
    std::string word;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Per-word modality effect beta + beta_w, summarized over the posterior
// draws. Output sorted by word label.
std::vector<WordEffect> word_effects(const HierarchicalFit& fit,
                                     const std::vector<std::string>& word_labels);

// Sample Pearson correlation. Requires equal lengths >= 3 and nonzero
// variance in both series.
double pearson_r(std::span<const double> a, std::span<const double> b);

// Split-chain potential scale reduction (each chain halved before the
// between/within variance ratio).
double split_rhat(const std::vector<std::vector<double>>& chains);

// Effective sample size from split chains with Geyer initial-monotone
// truncation of the autocorrelation sum.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace oscfit
