// Command-line front end: synth | fit | compare | plotdata.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 internal. Every output file
// starts with '#' provenance lines echoing the invocation; stripping them
// leaves plain CSV.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oscfit/corpus.hpp"
#include "oscfit/csv.hpp"
#include "oscfit/errors.hpp"
#include "oscfit/estimate.hpp"
#include "oscfit/gesture.hpp"
#include "oscfit/oscillator.hpp"
#include "oscfit/results_io.hpp"
#include "oscfit/signal.hpp"
#include "oscfit/stats.hpp"

namespace {

using namespace oscfit;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file '" + path + "'");
    return out;
}

std::string sibling_path(const std::string& base, const char* tag) {
    std::filesystem::path p(base);
    const std::string stem = p.stem().string();
    p.replace_filename(stem + "_" + tag + ".csv");
    return p.string();
}

struct Provenance {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> fields;

    void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, csv::format_double(value)); }
    void add(const std::string& key, long value) { add(key, std::to_string(value)); }

    void write(std::ostream& out) const {
        out << "# oscfit " << subcommand << '\n';
        for (const auto& [k, v] : fields) out << "# " << k << '=' << v << '\n';
    }
};

struct PipelineFlags {
    FitConfig cfg;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dct-order", cfg.dct_order, "Retained DCT coefficients")
            ->default_val(5)
            ->check(CLI::PositiveNumber);
        cmd->add_option("--target-rate", cfg.target_rate, "Analysis rate in Hz")
            ->default_val(81.0)
            ->check(CLI::PositiveNumber);
        cmd->add_option("--min-samples", cfg.min_samples, "Minimum samples per gesture")
            ->default_val(5)
            ->check(CLI::Range(3, 1 << 20));
        cmd->add_option("--min-peak-vel", cfg.min_peak_vel,
                        "Minimum peak |velocity| per gesture, mm/s")
            ->default_val(1.0);
        cmd->add_option("--jobs", cfg.jobs, "Parallel workers")->default_val(1)
            ->check(CLI::PositiveNumber);
    }

    void echo(Provenance& prov) const {
        prov.add("dct_order", static_cast<long>(cfg.dct_order));
        prov.add("target_rate", cfg.target_rate);
        prov.add("min_samples", static_cast<long>(cfg.min_samples));
        prov.add("min_peak_vel", cfg.min_peak_vel);
        prov.add("jobs", static_cast<long>(cfg.jobs));
    }
};

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
    SynthConfig cfg;
    std::string output;
};

void run_synth(const SynthArgs& args) {
    const auto tokens = synth_corpus(args.cfg);
    std::vector<TrajectoryRecord> records;
    records.reserve(tokens.size());
    for (const auto& tok : tokens) records.push_back(tok.record);

    Provenance prov;
    prov.subcommand = "synth";
    prov.add("output", args.output);
    prov.add("speakers", static_cast<long>(args.cfg.speakers));
    prov.add("words", static_cast<long>(args.cfg.words));
    prov.add("reps", static_cast<long>(args.cfg.reps));
    prov.add("ema_rate", args.cfg.ema_rate);
    prov.add("us_rate", args.cfg.us_rate);
    prov.add("noise_sd", args.cfg.noise_sd);
    prov.add("us_t_offset", args.cfg.us_t_offset);
    prov.add("span_frac", args.cfg.span_frac);
    prov.add("channel", args.cfg.channel);
    prov.add("seed", static_cast<long>(args.cfg.seed));

    auto out = open_output(args.output);
    prov.write(out);
    write_trajectories(records, out);
    std::cerr << "synth: wrote " << records.size() << " trajectories to " << args.output << "\n";
}

// ------------------------------------------------------------------ fit ---

struct FitArgs {
    std::string input;
    std::string output;
    std::string summary;
    std::string skips;
    PipelineFlags pipeline;
};

void run_fit(const FitArgs& args) {
    auto in = open_input(args.input);
    const auto records = read_trajectories(in);
    const auto paired = pair_records(records);
    const auto result = fit_corpus(paired.pairs, args.pipeline.cfg);

    Provenance prov;
    prov.subcommand = "fit";
    prov.add("input", args.input);
    args.pipeline.echo(prov);

    {
        auto out = open_output(args.output);
        prov.write(out);
        write_results(result.fits, out);
    }
    {
        auto out = open_output(args.summary);
        prov.write(out);
        write_summary(summarize_fits(result.fits), out);
    }
    {
        auto out = open_output(args.skips);
        prov.write(out);
        write_skips(result.skips, paired.unpaired, out);
    }

    for (const auto& w : result.warnings) std::cerr << "fit: warning: " << w << "\n";
    std::cerr << "fit: " << result.fits.size() << " gestures fitted, " << result.skips.size()
              << " skipped, " << paired.unpaired.size() << " unpaired trajectories\n";
}

// -------------------------------------------------------------- compare ---

struct CompareArgs {
    std::string input;
    std::string parameter = "T";
    std::string channel = "TDx";
    std::string posterior;
    std::string word_effects_path;
    McmcConfig mcmc;
};

void run_compare(const CompareArgs& args) {
    auto in = open_input(args.input);
    const auto results = read_results(in);

    std::set<std::string> speakers, words;
    for (const auto& r : results) {
        if (r.key.channel.name() != args.channel) continue;
        speakers.insert(r.key.speaker);
        words.insert(r.key.word);
    }
    std::map<std::string, std::size_t> speaker_idx, word_idx;
    for (const auto& s : speakers) speaker_idx.emplace(s, speaker_idx.size());
    for (const auto& w : words) word_idx.emplace(w, word_idx.size());

    std::vector<ComparisonObservation> obs;
    for (const auto& r : results) {
        if (r.key.channel.name() != args.channel) continue;
        ComparisonObservation o;
        o.y = args.parameter == "T" ? r.params.T : (args.parameter == "k" ? r.params.k : r.params.b);
        o.speaker = speaker_idx.at(r.key.speaker);
        o.word = word_idx.at(r.key.word);
        o.modality = r.modality == Modality::US ? 1 : 0;
        obs.push_back(o);
    }
    if (obs.empty()) {
        throw DataError("no observations for channel '" + args.channel + "' in " + args.input);
    }

    const auto fit = fit_hierarchical(obs, speakers.size(), words.size(), args.mcmc);
    if (!fit.converged) {
        std::cerr << "compare: warning: R-hat above 1.05 on at least one parameter\n";
    }

    Provenance prov;
    prov.subcommand = "compare";
    prov.add("input", args.input);
    prov.add("parameter", args.parameter);
    prov.add("channel", args.channel);
    prov.add("chains", static_cast<long>(args.mcmc.chains));
    prov.add("warmup", static_cast<long>(args.mcmc.warmup));
    prov.add("draws", static_cast<long>(args.mcmc.draws));
    prov.add("step", args.mcmc.init_step);
    prov.add("seed", static_cast<long>(args.mcmc.seed));

    {
        auto out = open_output(args.posterior);
        prov.write(out);
        out << "parameter,mean,ci_low,ci_high,rhat,ess\n";
        for (const auto& s : fit.summaries) {
            out << s.name << ',' << csv::format_double(s.mean) << ','
                << csv::format_double(s.ci_low) << ',' << csv::format_double(s.ci_high) << ','
                << csv::format_double(s.rhat) << ',' << csv::format_double(s.ess) << '\n';
        }
    }
    {
        std::vector<std::string> labels(words.begin(), words.end());
        const auto effects = word_effects(fit, labels);
        auto out = open_output(args.word_effects_path);
        prov.write(out);
        out << "word,mean,ci_low,ci_high\n";
        for (const auto& e : effects) {
            out << e.word << ',' << csv::format_double(e.mean) << ','
                << csv::format_double(e.ci_low) << ',' << csv::format_double(e.ci_high) << '\n';
        }
    }

    const auto& beta = fit.summary_for("beta");
    std::cerr << "compare: beta(" << args.parameter << ", " << args.channel
              << ") mean=" << beta.mean << " ci=[" << beta.ci_low << ", " << beta.ci_high
              << "] rhat=" << beta.rhat << "\n";
}

// ------------------------------------------------------------- plotdata ---

struct PlotArgs {
    std::string corpus;
    std::string results;
    std::string output;
    std::string key;
    int sample = 0;
    std::uint64_t seed = 0;
    PipelineFlags pipeline;
};

struct ResultKey {
    PairKey key;
    Modality modality = Modality::EMA;
    int gesture_index = 0;

    friend auto operator<=>(const ResultKey&, const ResultKey&) = default;
};

ResultKey parse_result_key(const std::string& text) {
    const auto parts = csv::split_line(text);
    if (parts.size() != 6) {
        throw DataError("bad --key '" + text +
                        "': expected speaker,word,modality,channel,rep,gesture_index");
    }
    ResultKey rk;
    rk.key.speaker = parts[0];
    rk.key.word = parts[1];
    rk.modality = modality_from_string(parts[2]);
    rk.key.channel = Channel::parse(parts[3]);
    rk.key.repetition = static_cast<int>(csv::parse_long(parts[4], "rep", 0));
    rk.gesture_index = static_cast<int>(csv::parse_long(parts[5], "gesture_index", 0));
    return rk;
}

void run_plotdata(const PlotArgs& args) {
    auto rin = open_input(args.results);
    const auto results = read_results(rin);
    auto cin_ = open_input(args.corpus);
    const auto records = read_trajectories(cin_);

    std::map<ResultKey, FitResult> by_key;
    for (const auto& r : results) by_key.emplace(ResultKey{r.key, r.modality, r.gesture_index}, r);

    std::vector<ResultKey> selected;
    if (!args.key.empty()) {
        selected.push_back(parse_result_key(args.key));
    } else {
        std::vector<ResultKey> all;
        all.reserve(by_key.size());
        for (const auto& [k, r] : by_key) all.push_back(k);
        if (all.empty()) throw DataError("no results to sample from");
        std::mt19937_64 rng(args.seed);
        for (int i = 0; i < args.sample && !all.empty(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
            const std::size_t j = pick(rng);
            selected.push_back(all[j]);
            all.erase(all.begin() + static_cast<std::ptrdiff_t>(j));
        }
    }

    Provenance prov;
    prov.subcommand = "plotdata";
    prov.add("corpus", args.corpus);
    prov.add("results", args.results);
    if (!args.key.empty()) {
        prov.add("key", args.key);
    } else {
        prov.add("sample", static_cast<long>(args.sample));
        prov.add("seed", static_cast<long>(args.seed));
    }
    args.pipeline.echo(prov);

    auto out = open_output(args.output);
    prov.write(out);
    out << "speaker,word,modality,channel,rep,gesture_index,t,x_empirical,x_model,"
           "v_empirical,v_model\n";

    for (const ResultKey& rk : selected) {
        const auto rit = by_key.find(rk);
        if (rit == by_key.end()) {
            throw DataError("key not found in results: " + to_string(rk.key) + "/" +
                            std::string(to_string(rk.modality)) + " gesture " +
                            std::to_string(rk.gesture_index));
        }
        const auto rec_it =
            std::find_if(records.begin(), records.end(), [&](const TrajectoryRecord& rec) {
                return rec.key() == rk.key && rec.modality == rk.modality;
            });
        if (rec_it == records.end()) {
            throw DataError("trajectory not found in corpus: " + to_string(rk.key) + "/" +
                            std::string(to_string(rk.modality)));
        }

        // Re-run the preprocessing used by `fit` (same flags required).
        TrajectoryRecord rec = *rec_it;
        const FitConfig& cfg = args.pipeline.cfg;
        if (rec.sample_rate > cfg.target_rate * (1.0 + 1e-9)) rec = downsample(rec, cfg.target_rate);
        rec = center(rec);
        const auto smooth = dct_smooth(rec, cfg.dct_order);
        const auto segments = segment_gestures(smooth, cfg.min_samples, cfg.min_peak_vel);
        const auto seg_it =
            std::find_if(segments.begin(), segments.end(), [&](const GestureSegment& s) {
                return s.gesture_index == rk.gesture_index;
            });
        if (seg_it == segments.end()) {
            throw DataError("gesture " + std::to_string(rk.gesture_index) +
                            " not reproducible for " + to_string(rk.key) +
                            " (check that the pipeline flags match the fit run)");
        }

        const GestureSegment& seg = *seg_it;
        const Motion sim = integrate_rk4(rit->second.params, seg.positions.front(),
                                         seg.velocity.front(), seg.sample_rate, seg.size() - 1);
        for (std::size_t i = 0; i < seg.size(); ++i) {
            out << rk.key.speaker << ',' << rk.key.word << ',' << to_string(rk.modality) << ','
                << rk.key.channel.name() << ',' << rk.key.repetition << ',' << rk.gesture_index
                << ',' << csv::format_double(seg.t_start + static_cast<double>(i) / seg.sample_rate)
                << ',' << csv::format_double(seg.positions[i]) << ','
                << csv::format_double(sim.positions[i]) << ','
                << csv::format_double(seg.velocity[i]) << ','
                << csv::format_double(sim.velocities[i]) << '\n';
        }
    }
    std::cerr << "plotdata: wrote " << selected.size() << " gesture(s) to " << args.output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic-oscillator parameter estimation from articulator kinematics"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus CSV");
    synth_cmd->add_option("-o,--output", synth.output, "Corpus CSV path")->required();
    synth_cmd->add_option("--speakers", synth.cfg.speakers)->default_val(6);
    synth_cmd->add_option("--words", synth.cfg.words)->default_val(29);
    synth_cmd->add_option("--reps", synth.cfg.reps)->default_val(4);
    synth_cmd->add_option("--ema-rate", synth.cfg.ema_rate)->default_val(1250.0);
    synth_cmd->add_option("--us-rate", synth.cfg.us_rate)->default_val(81.0);
    synth_cmd->add_option("--noise-sd", synth.cfg.noise_sd, "Measurement noise SD, mm")
        ->default_val(0.0);
    synth_cmd->add_option("--us-t-offset", synth.cfg.us_t_offset,
                          "Additive offset on ultrasound targets, mm")
        ->default_val(0.0);
    synth_cmd->add_option("--span-frac", synth.cfg.span_frac)->default_val(0.80);
    synth_cmd->add_option("--channel", synth.cfg.channel)->default_val("TDx");
    synth_cmd->add_option("--seed", synth.cfg.seed)->default_val(0);
    synth_cmd->add_option("--k-min", synth.cfg.k_min)->default_val(150.0);
    synth_cmd->add_option("--k-max", synth.cfg.k_max)->default_val(600.0);
    synth_cmd->add_option("--b-min", synth.cfg.b_min)->default_val(10.0);
    synth_cmd->add_option("--b-max", synth.cfg.b_max)->default_val(30.0);
    synth_cmd->add_option("--t-min", synth.cfg.t_min)->default_val(-15.0);
    synth_cmd->add_option("--t-max", synth.cfg.t_max)->default_val(15.0);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate oscillator parameters per gesture");
    fit_cmd->add_option("-i,--input", fit.input, "Corpus CSV")->required();
    fit_cmd->add_option("-o,--output", fit.output, "Results CSV")->required();
    fit_cmd->add_option("--summary", fit.summary, "Summary CSV (default <output>_summary.csv)");
    fit_cmd->add_option("--skips", fit.skips, "Skip-report CSV (default <output>_skips.csv)");
    fit.pipeline.attach(fit_cmd);

    CompareArgs compare;
    auto* compare_cmd =
        app.add_subcommand("compare", "Bayesian EMA/US comparison of a fitted parameter");
    compare_cmd->add_option("-i,--input", compare.input, "Results CSV")->required();
    compare_cmd->add_option("-p,--parameter", compare.parameter, "Parameter: T, k, or b")
        ->default_val("T")
        ->check(CLI::IsMember({"T", "k", "b"}));
    compare_cmd->add_option("-c,--channel", compare.channel, "Channel filter")->default_val("TDx");
    compare_cmd->add_option("--posterior", compare.posterior, "Posterior summary CSV")->required();
    compare_cmd->add_option("--word-effects", compare.word_effects_path, "Word effects CSV")
        ->required();
    compare_cmd->add_option("--chains", compare.mcmc.chains)->default_val(4);
    compare_cmd->add_option("--warmup", compare.mcmc.warmup)->default_val(1000);
    compare_cmd->add_option("--draws", compare.mcmc.draws)->default_val(2000);
    compare_cmd->add_option("--step", compare.mcmc.init_step)->default_val(0.1);
    compare_cmd->add_option("--seed", compare.mcmc.seed)->default_val(0);

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plotdata", "Aligned empirical/model trajectories");
    plot_cmd->add_option("--corpus", plot.corpus, "Corpus CSV")->required();
    plot_cmd->add_option("--results", plot.results, "Results CSV")->required();
    plot_cmd->add_option("-o,--output", plot.output, "Plot data CSV")->required();
    auto* key_opt = plot_cmd->add_option(
        "--key", plot.key, "speaker,word,modality,channel,rep,gesture_index");
    plot_cmd->add_option("--sample", plot.sample, "Sample this many random gestures")
        ->excludes(key_opt);
    plot_cmd->add_option("--seed", plot.seed)->default_val(0);
    plot.pipeline.attach(plot_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) {
            run_synth(synth);
        } else if (fit_cmd->parsed()) {
            if (fit.summary.empty()) fit.summary = sibling_path(fit.output, "summary");
            if (fit.skips.empty()) fit.skips = sibling_path(fit.output, "skips");
            run_fit(fit);
        } else if (compare_cmd->parsed()) {
            run_compare(compare);
        } else if (plot_cmd->parsed()) {
            if (plot.key.empty() && plot.sample <= 0) {
                std::cerr << "plotdata: either --key or --sample is required\n";
                return 1;
            }
            run_plotdata(plot);
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
