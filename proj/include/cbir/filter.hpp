#pragma once

#include <iosfwd>
#include <vector>

#include "cbir/index.hpp"

namespace cbir {

/// Closed real interval; boundary values are members.
struct Interval {
    double lower = 0;
    double upper = 0;

    bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Survival region of one feature channel for one query:
///   query_band    = [f_q - r_max, f_q + r_max]
///   category_band = [a_m, b_m] of the nearest-center category m
/// An image value survives when it lies in either band.
struct QueryInterval {
    Interval query_band;
    Interval category_band;
    int nearest_category = 0;

    bool contains(double v) const {
        return query_band.contains(v) || category_band.contains(v);
    }
    // The union as one merged or two disjoint closed intervals.
    std::vector<Interval> union_parts() const;
};

// m = argmin_i |f_q - center_i|, ties broken by smallest category id.
QueryInterval query_interval(double query_value, const FeatureChannelIndex& channel);

enum class CombineMode {
    Intersect,  // survivors must pass every channel
    Union,      // survivors pass at least one channel
};

struct FilterOptions {
    CombineMode combine = CombineMode::Intersect;
    // Channel positions to use; empty means all channels.
    std::vector<int> channels;
    // Collect per-channel survivor lists; costs an extra scan per channel,
    // so the timing-sensitive path leaves it off.
    bool diagnostics = false;
};

/// Filter outcome: the surviving id set plus per-channel diagnostics.
struct CandidateSet {
    std::vector<int> image_ids;  // sorted subset of the indexed ids
    std::vector<QueryInterval> intervals;  // per used channel
    // Per used channel; filled only when FilterOptions::diagnostics is set.
    std::vector<std::vector<int>> per_channel_survivors;
    bool used_fallback = false;  // empty combination -> full indexed set
};

// Scans the stored feature table against each channel's survival region and
// combines per-channel survivors. An empty combined set falls back to the
// full indexed set with used_fallback set.
CandidateSet filter_candidates(const FeatureVector& query,
                               const PrefilterIndex& index,
                               const FilterOptions& options = {});

// Verbose per-query dump: one delimited line per channel with the bands,
// the argmin category and survivor counts. The candidates must carry
// per-channel diagnostics.
void write_filter_diagnostics(std::ostream& out, const PrefilterIndex& index,
                              const FilterOptions& options,
                              const CandidateSet& candidates);

}  // namespace cbir
