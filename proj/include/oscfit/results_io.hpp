#pragma once

#include <iosfwd>
#include <vector>

#include "oscfit/estimate.hpp"

namespace oscfit {

// Result CSV schema: speaker,word,modality,channel,rep,gesture_index,
// t_start,t_end,b,k,T,damping_class,r2_pos,r2_vel,converged. Numeric
// fields are written with 17 significant digits so a read/write round trip
// is exact; undefined R^2 values are written as NA. '#' lines are accepted
// (and skipped) on the read side.
void write_results(const std::vector<FitResult>& results, std::ostream& sink);
std::vector<FitResult> read_results(std::istream& source);

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& sink);

void write_skips(const std::vector<SkipRecord>& skips,
                 const std::vector<UnpairedRecord>& unpaired, std::ostream& sink);

}  // namespace oscfit
