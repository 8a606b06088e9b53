#include "cbir/filter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cbir/bench.hpp"

namespace cbir {

std::vector<Interval> QueryInterval::union_parts() const {
    Interval lo = query_band;
    Interval hi = category_band;
    if (hi.lower < lo.lower) {
        std::swap(lo, hi);
    }
    if (hi.lower <= lo.upper) {
        return {{lo.lower, std::max(lo.upper, hi.upper)}};
    }
    return {lo, hi};
}

QueryInterval query_interval(double query_value, const FeatureChannelIndex& channel) {
    if (!std::isfinite(query_value)) {
        throw std::invalid_argument("query_interval: non-finite query value");
    }
    if (channel.stats.empty()) {
        throw std::invalid_argument("query_interval: channel has no category stats");
    }

    QueryInterval qi;
    qi.query_band = {query_value - channel.max_radius, query_value + channel.max_radius};

    // argmin over category centers; ties go to the smallest category id
    const CategoryStats* best = &channel.stats[0];
    double best_dist = std::abs(query_value - best->center);
    for (const CategoryStats& s : channel.stats) {
        const double dist = std::abs(query_value - s.center);
        if (dist < best_dist || (dist == best_dist && s.category_id < best->category_id)) {
            best = &s;
            best_dist = dist;
        }
    }
    qi.category_band = {best->lower, best->upper};
    qi.nearest_category = best->category_id;
    return qi;
}

namespace {

std::vector<int> used_channels(const PrefilterIndex& index, const FilterOptions& options) {
    if (options.channels.empty()) {
        std::vector<int> all(static_cast<std::size_t>(index.channel_count()));
        for (int i = 0; i < index.channel_count(); ++i) {
            all[static_cast<std::size_t>(i)] = i;
        }
        return all;
    }
    for (int ch : options.channels) {
        if (ch < 0 || ch >= index.channel_count()) {
            throw std::invalid_argument("filter: channel position " + std::to_string(ch) +
                                        " outside [0, " +
                                        std::to_string(index.channel_count()) + ")");
        }
    }
    return options.channels;
}

}  // namespace

CandidateSet filter_candidates(const FeatureVector& query, const PrefilterIndex& index,
                               const FilterOptions& options) {
    if (query.indices != index.features) {
        throw std::invalid_argument("filter: query feature indices do not match index channels");
    }

    const std::vector<int> channels = used_channels(index, options);
    if (channels.empty()) {
        throw std::invalid_argument("filter: index has no feature channels");
    }
    CandidateSet result;
    result.intervals.reserve(channels.size());
    for (int ch : channels) {
        result.intervals.push_back(
            query_interval(query.values[static_cast<std::size_t>(ch)],
                           index.channels[static_cast<std::size_t>(ch)]));
    }

    // one pass over the table; rows are ordered by id, so the result is too
    const bool intersect = options.combine == CombineMode::Intersect;
    std::vector<int> combined;
    combined.reserve(index.image_features.size());
    for (const FeatureRow& row : index.image_features) {
        bool keep = intersect;
        for (std::size_t i = 0; i < channels.size(); ++i) {
            const bool in = result.intervals[i].contains(
                row.values[static_cast<std::size_t>(channels[i])]);
            if (intersect ? !in : in) {
                keep = !intersect;
                break;
            }
        }
        if (keep) {
            combined.push_back(row.image_id);
        }
    }

    if (options.diagnostics) {
        result.per_channel_survivors.reserve(channels.size());
        for (std::size_t i = 0; i < channels.size(); ++i) {
            std::vector<int> survivors;
            for (const FeatureRow& row : index.image_features) {
                if (result.intervals[i].contains(
                        row.values[static_cast<std::size_t>(channels[i])])) {
                    survivors.push_back(row.image_id);
                }
            }
            result.per_channel_survivors.push_back(std::move(survivors));
        }
    }

    if (combined.empty()) {
        result.used_fallback = true;
        combined.reserve(index.image_features.size());
        for (const FeatureRow& row : index.image_features) {
            combined.push_back(row.image_id);
        }
    }
    result.image_ids = std::move(combined);
    return result;
}

void write_filter_diagnostics(std::ostream& out, const PrefilterIndex& index,
                              const FilterOptions& options,
                              const CandidateSet& candidates) {
    const std::vector<int> channels = used_channels(index, options);
    if (candidates.per_channel_survivors.size() != channels.size()) {
        throw std::invalid_argument(
            "filter diagnostics were not collected for this candidate set");
    }
    out << "channel,feature,s1_lower,s1_upper,s2_lower,s2_upper,nearest_category,survivors\n";
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const QueryInterval& qi = candidates.intervals[i];
        out << channels[i] << ','
            << feature_label(index.features[static_cast<std::size_t>(channels[i])]) << ','
            << format_double(qi.query_band.lower) << ',' << format_double(qi.query_band.upper)
            << ',' << format_double(qi.category_band.lower) << ','
            << format_double(qi.category_band.upper) << ',' << qi.nearest_category << ','
            << candidates.per_channel_survivors[i].size() << '\n';
    }
    out << "combined,,,,,," << (candidates.used_fallback ? "fallback" : "") << ','
        << candidates.image_ids.size() << '\n';
}

}  // namespace cbir
