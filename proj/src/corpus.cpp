#include "oscfit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include "oscfit/csv.hpp"
#include "oscfit/errors.hpp"

namespace oscfit {

std::string_view to_string(Modality m) {
    return m == Modality::EMA ? "EMA" : "US";
}

Modality modality_from_string(std::string_view s, std::size_t line_no) {
    if (s == "EMA") return Modality::EMA;
    if (s == "US") return Modality::US;
    throw DataError("line " + std::to_string(line_no) + ": unknown modality '" + std::string(s) +
                    "' (expected EMA or US)");
}

Channel Channel::parse(std::string_view text) {
    if (text == "TDx") return {Kind::TDx, "TDx"};
    if (text == "TDy") return {Kind::TDy, "TDy"};
    if (text == "JAWx") return {Kind::JAWx, "JAWx"};
    if (text == "JAWy") return {Kind::JAWy, "JAWy"};
    return {Kind::Other, std::string(text)};
}

std::string to_string(const PairKey& key) {
    return key.speaker + "/" + key.word + "/" + key.channel.name() + "/rep" +
           std::to_string(key.repetition);
}

namespace {

constexpr double kGridTolerance = 0.01;  // max relative deviation of dt from the median

struct RowGroup {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<std::size_t> lines;  // source line of each row, for diagnostics
};

using GroupKey = std::tuple<std::string, std::string, int, Channel, int>;  // modality as int

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<TrajectoryRecord> read_trajectories(std::istream& source) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_data_line(source, line, line_no)) {
        throw DataError("empty input: missing header row");
    }
    const std::vector<std::string> header = csv::split_line(line);
    const std::vector<std::string> expected = {"speaker", "word", "modality",
                                               "channel", "rep",  "t",       "x"};
    if (header != expected) {
        throw DataError("line " + std::to_string(line_no) +
                        ": bad header, expected 'speaker,word,modality,channel,rep,t,x'");
    }

    std::map<GroupKey, RowGroup> groups;
    while (csv::next_data_line(source, line, line_no)) {
        const auto fields = csv::split_line(line);
        if (fields.size() != expected.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(expected.size()) + " columns, found " +
                            std::to_string(fields.size()));
        }
        const Modality modality = modality_from_string(fields[2], line_no);
        const Channel channel = Channel::parse(fields[3]);
        const long rep = csv::parse_long(fields[4], "rep", line_no);
        if (rep < 0) {
            throw DataError("line " + std::to_string(line_no) + ": negative repetition index");
        }
        const double t = csv::parse_double(fields[5], "t", line_no);
        const double x = csv::parse_double(fields[6], "x", line_no);

        RowGroup& g = groups[{fields[0], fields[1], static_cast<int>(modality), channel,
                              static_cast<int>(rep)}];
        g.times.push_back(t);
        g.values.push_back(x);
        g.lines.push_back(line_no);
    }

    std::vector<TrajectoryRecord> records;
    records.reserve(groups.size());
    for (const auto& [key, g] : groups) {
        const auto& [speaker, word, modality, channel, rep] = key;
        const std::string label = to_string(PairKey{speaker, word, channel, rep}) + "/" +
                                  std::string(to_string(static_cast<Modality>(modality)));
        if (g.times.size() < 2) {
            throw DataError("group " + label + ": needs at least 2 samples, has " +
                            std::to_string(g.times.size()));
        }
        std::vector<double> dts(g.times.size() - 1);
        for (std::size_t i = 1; i < g.times.size(); ++i) {
            const double dt = g.times[i] - g.times[i - 1];
            if (dt <= 0.0) {
                throw DataError("line " + std::to_string(g.lines[i]) + ": non-monotone time in group " +
                                label);
            }
            dts[i - 1] = dt;
        }
        const double dt_med = median_of(dts);
        for (std::size_t i = 0; i < dts.size(); ++i) {
            if (std::abs(dts[i] - dt_med) > kGridTolerance * dt_med) {
                throw DataError("line " + std::to_string(g.lines[i + 1]) +
                                ": non-uniform sampling grid in group " + label + " (dt " +
                                csv::format_double(dts[i]) + " vs median " +
                                csv::format_double(dt_med) + ")");
            }
        }

        TrajectoryRecord rec;
        rec.speaker = speaker;
        rec.word = word;
        rec.modality = static_cast<Modality>(modality);
        rec.channel = channel;
        rec.repetition = rep;
        rec.sample_rate = 1.0 / dt_med;
        rec.t0 = g.times.front();
        rec.positions = g.values;
        records.push_back(std::move(rec));
    }

    std::sort(records.begin(), records.end(), [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
        return std::tie(a.speaker, a.word, a.channel, a.repetition, a.modality) <
               std::tie(b.speaker, b.word, b.channel, b.repetition, b.modality);
    });
    return records;
}

void write_trajectories(const std::vector<TrajectoryRecord>& records, std::ostream& sink) {
    sink << "speaker,word,modality,channel,rep,t,x\n";
    for (const auto& rec : records) {
        for (std::size_t i = 0; i < rec.positions.size(); ++i) {
            sink << rec.speaker << ',' << rec.word << ',' << to_string(rec.modality) << ','
                 << rec.channel.name() << ',' << rec.repetition << ','
                 << csv::format_double(rec.time_at(i)) << ','
                 << csv::format_double(rec.positions[i]) << '\n';
        }
    }
    if (!sink) throw DataError("write failure on trajectory sink");
}

PairingResult pair_records(const std::vector<TrajectoryRecord>& records) {
    std::map<PairKey, std::pair<const TrajectoryRecord*, const TrajectoryRecord*>> by_key;
    for (const auto& rec : records) {
        auto& slot = by_key[rec.key()];
        const TrajectoryRecord*& side = rec.modality == Modality::EMA ? slot.first : slot.second;
        if (side != nullptr) {
            throw DataError("duplicate record for " + to_string(rec.key()) + "/" +
                            std::string(to_string(rec.modality)));
        }
        side = &rec;
    }

    PairingResult result;
    for (const auto& [key, slot] : by_key) {
        if (slot.first != nullptr && slot.second != nullptr) {
            result.pairs.push_back({key, *slot.first, *slot.second});
        } else {
            const TrajectoryRecord* only = slot.first != nullptr ? slot.first : slot.second;
            result.unpaired.push_back({key, only->modality});
        }
    }
    return result;  // std::map iteration keeps both lists sorted by key
}

}  // namespace oscfit
