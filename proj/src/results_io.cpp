#include "oscfit/results_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "oscfit/csv.hpp"
#include "oscfit/errors.hpp"

namespace oscfit {

namespace {

const char* kResultHeader =
    "speaker,word,modality,channel,rep,gesture_index,t_start,t_end,b,k,T,damping_class,"
    "r2_pos,r2_vel,converged";

std::string format_optional(const std::optional<double>& v) {
    return v.has_value() ? csv::format_double(*v) : "NA";
}

std::optional<double> parse_optional(std::string_view field, std::string_view column,
                                     std::size_t line_no) {
    if (field == "NA") return std::nullopt;
    return csv::parse_double(field, column, line_no);
}

std::string sanitize(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

void write_results(const std::vector<FitResult>& results, std::ostream& sink) {
    sink << kResultHeader << '\n';
    for (const FitResult& r : results) {
        sink << r.key.speaker << ',' << r.key.word << ',' << to_string(r.modality) << ','
             << r.key.channel.name() << ',' << r.key.repetition << ',' << r.gesture_index << ','
             << csv::format_double(r.t_start) << ',' << csv::format_double(r.t_end) << ','
             << csv::format_double(r.params.b) << ',' << csv::format_double(r.params.k) << ','
             << csv::format_double(r.params.T) << ',' << to_string(r.params.damping_class())
             << ',' << format_optional(r.r2_pos) << ',' << format_optional(r.r2_vel) << ','
             << (r.converged ? "true" : "false") << '\n';
    }
    if (!sink) throw DataError("write failure on results sink");
}

std::vector<FitResult> read_results(std::istream& source) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_data_line(source, line, line_no)) {
        throw DataError("empty input: missing results header");
    }
    if (line != kResultHeader) {
        throw DataError("line " + std::to_string(line_no) + ": bad results header");
    }

    std::vector<FitResult> out;
    while (csv::next_data_line(source, line, line_no)) {
        const auto f = csv::split_line(line);
        if (f.size() != 15) {
            throw DataError("line " + std::to_string(line_no) + ": expected 15 columns, found " +
                            std::to_string(f.size()));
        }
        FitResult r;
        r.key.speaker = f[0];
        r.key.word = f[1];
        r.modality = modality_from_string(f[2], line_no);
        r.key.channel = Channel::parse(f[3]);
        r.key.repetition = static_cast<int>(csv::parse_long(f[4], "rep", line_no));
        r.gesture_index = static_cast<int>(csv::parse_long(f[5], "gesture_index", line_no));
        r.t_start = csv::parse_double(f[6], "t_start", line_no);
        r.t_end = csv::parse_double(f[7], "t_end", line_no);
        r.params.b = csv::parse_double(f[8], "b", line_no);
        r.params.k = csv::parse_double(f[9], "k", line_no);
        r.params.T = csv::parse_double(f[10], "T", line_no);
        damping_class_from_string(f[11]);  // validate; the value is derived from b and k
        r.r2_pos = parse_optional(f[12], "r2_pos", line_no);
        r.r2_vel = parse_optional(f[13], "r2_vel", line_no);
        if (f[14] != "true" && f[14] != "false") {
            throw DataError("line " + std::to_string(line_no) + ": bad converged flag '" + f[14] +
                            "'");
        }
        r.converged = f[14] == "true";
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& sink) {
    sink << "variable,modality,n,r2_mean,r2_sd,r2_min,r2_max\n";
    for (const SummaryRow& row : rows) {
        sink << row.variable << ',' << to_string(row.modality) << ',' << row.n << ','
             << csv::format_double(row.r2_mean) << ',' << csv::format_double(row.r2_sd) << ','
             << csv::format_double(row.r2_min) << ',' << csv::format_double(row.r2_max) << '\n';
    }
    if (!sink) throw DataError("write failure on summary sink");
}

void write_skips(const std::vector<SkipRecord>& skips,
                 const std::vector<UnpairedRecord>& unpaired, std::ostream& sink) {
    sink << "speaker,word,modality,channel,rep,gesture_index,stage,reason\n";
    for (const UnpairedRecord& u : unpaired) {
        sink << u.key.speaker << ',' << u.key.word << ',' << to_string(u.modality) << ','
             << u.key.channel.name() << ',' << u.key.repetition << ",-1,pairing,"
             << "no matching record in the other modality\n";
    }
    for (const SkipRecord& s : skips) {
        sink << s.key.speaker << ',' << s.key.word << ','
             << (s.modality.has_value() ? to_string(*s.modality) : "") << ','
             << s.key.channel.name() << ',' << s.key.repetition << ',' << s.gesture_index << ','
             << s.stage << ',' << sanitize(s.reason) << '\n';
    }
    if (!sink) throw DataError("write failure on skip sink");
}

}  // namespace oscfit
