#pragma once

#include <chrono>
#include <iosfwd>
#include <vector>

#include "cbir/filter.hpp"

namespace cbir {

// Euclidean distance over feature values; zero iff componentwise equal.
// Throws std::invalid_argument when the index lists differ.
double feature_distance(const FeatureVector& a, const FeatureVector& b);

/// Ranking outcome over one candidate set.
struct RetrievalResult {
    std::vector<int> ranked_ids;
    std::vector<double> distances;  // non-decreasing, parallel to ranked_ids
    std::chrono::nanoseconds elapsed{0};  // ranking stage only
};

// k nearest candidates by Euclidean distance over the stored features, ties
// broken by smaller image id. k is clamped to the candidate count. elapsed
// covers the distance-and-sort loop only.
RetrievalResult retrieve(const FeatureVector& query, const CandidateSet& candidates,
                         const PrefilterIndex& index, int k);

// Delimited-text export of one ranking: header query_id,rank,image_id,distance
// then one row per neighbour. query_id 0 marks an ad-hoc query image that has
// no corpus id.
void write_ranking_csv(std::ostream& out, int query_id, const RetrievalResult& result);

// Fraction of the first k ranked ids whose category equals query_category.
// The divisor is k even when fewer results are available.
double precision_at_k(const RetrievalResult& result, int query_category,
                      const Corpus& corpus, int k);

/// Per-category precision@K with the unweighted category mean.
struct PrecisionReport {
    std::vector<std::pair<int, double>> per_category;  // (category_id, precision)
    double mean_precision = 0;
    int k = 0;
};

}  // namespace cbir
