#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace oscfit {

enum class Modality { EMA, US };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s, std::size_t line_no = 0);

// Measurement dimension. The four named channels cover the tongue dorsum and
// jaw in x/y; anything else is carried through as free text.
struct Channel {
    enum class Kind { TDx, TDy, JAWx, JAWy, Other };

    Kind kind = Kind::Other;
    std::string label;  // canonical name for known kinds, user text otherwise

    static Channel parse(std::string_view text);
    const std::string& name() const { return label; }

    friend auto operator<=>(const Channel&, const Channel&) = default;
};

// Identifies a token within one measurement dimension. A pair is complete
// when both an EMA and a US record carry the same key.
struct PairKey {
    std::string speaker;
    std::string word;
    Channel channel;
    int repetition = 0;

    friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

std::string to_string(const PairKey& key);

// One channel's uniformly-sampled time series. Sample i is at time
// t0 + i / sample_rate; no per-sample timestamps are stored.
struct TrajectoryRecord {
    std::string speaker;
    std::string word;
    Modality modality = Modality::EMA;
    Channel channel;
    int repetition = 0;
    double sample_rate = 0.0;  // Hz, > 0
    double t0 = 0.0;           // seconds
    std::vector<double> positions;  // mm, length >= 2

    PairKey key() const { return PairKey{speaker, word, channel, repetition}; }
    double time_at(std::size_t i) const {
        return t0 + static_cast<double>(i) / sample_rate;
    }
    std::size_t size() const { return positions.size(); }
};

// Reads the long-format corpus CSV (header: speaker,word,modality,channel,
// rep,t,x). Rows are grouped by (speaker, word, modality, channel, rep);
// within a group the time column must be strictly increasing on a uniform
// grid (each step within 1% of the median step). Lines starting with '#'
// are skipped. Throws DataError with a line number on malformed input.
std::vector<TrajectoryRecord> read_trajectories(std::istream& source);

void write_trajectories(const std::vector<TrajectoryRecord>& records, std::ostream& sink);

struct RecordPair {
    PairKey key;
    TrajectoryRecord ema;
    TrajectoryRecord us;
};

struct UnpairedRecord {
    PairKey key;
    Modality modality = Modality::EMA;
};

struct PairingResult {
    std::vector<RecordPair> pairs;        // sorted by key
    std::vector<UnpairedRecord> unpaired; // sorted by (key, modality)
};

// Matches EMA/US records sharing a PairKey. Every input record lands in
// exactly one of pairs/unpaired. Duplicate (key, modality) is a DataError.
PairingResult pair_records(const std::vector<TrajectoryRecord>& records);

}  // namespace oscfit
