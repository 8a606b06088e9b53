#include "cbir/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cbir/bench.hpp"

namespace cbir {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace

double feature_distance(const FeatureVector& a, const FeatureVector& b) {
    if (a.indices != b.indices) {
        throw std::invalid_argument("feature_distance: mismatched index lists");
    }
    return std::sqrt(squared_distance(a.values, b.values));
}

RetrievalResult retrieve(const FeatureVector& query, const CandidateSet& candidates,
                         const PrefilterIndex& index, int k) {
    if (k < 1) {
        throw std::invalid_argument("retrieve: k must be >= 1");
    }
    if (candidates.image_ids.empty()) {
        throw std::invalid_argument("retrieve: empty candidate set");
    }
    if (query.indices != index.features) {
        throw std::invalid_argument("retrieve: query feature indices do not match index");
    }

    // resolve candidate rows up front; the timed section is the ranking only
    std::vector<const FeatureRow*> rows;
    rows.reserve(candidates.image_ids.size());
    for (int id : candidates.image_ids) {
        const int pos = index.row_of(id);
        if (pos < 0) {
            throw std::invalid_argument("retrieve: candidate id " + std::to_string(id) +
                                        " is not in the index");
        }
        rows.push_back(&index.image_features[static_cast<std::size_t>(pos)]);
    }

    const std::size_t depth = std::min(static_cast<std::size_t>(k), rows.size());
    std::vector<std::pair<double, int>> scored(rows.size());

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        scored[i] = {squared_distance(query.values, rows[i]->values), rows[i]->image_id};
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(depth),
                      scored.end());  // pair ordering breaks distance ties by id
    const auto stop = std::chrono::steady_clock::now();

    RetrievalResult result;
    result.ranked_ids.reserve(depth);
    result.distances.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i) {
        result.ranked_ids.push_back(scored[i].second);
        result.distances.push_back(std::sqrt(scored[i].first));
    }
    result.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start);
    return result;
}

void write_ranking_csv(std::ostream& out, int query_id, const RetrievalResult& result) {
    out << "query_id,rank,image_id,distance\n";
    for (std::size_t i = 0; i < result.ranked_ids.size(); ++i) {
        out << query_id << ',' << (i + 1) << ',' << result.ranked_ids[i] << ','
            << format_double(result.distances[i]) << '\n';
    }
}

double precision_at_k(const RetrievalResult& result, int query_category,
                      const Corpus& corpus, int k) {
    if (k < 1) {
        throw std::invalid_argument("precision_at_k: k must be >= 1");
    }
    if (result.ranked_ids.empty()) {
        throw std::invalid_argument("precision_at_k: empty result");
    }
    const std::size_t depth = std::min(static_cast<std::size_t>(k), result.ranked_ids.size());
    int hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (corpus.category_of(result.ranked_ids[i]) == query_category) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / k;
}

}  // namespace cbir
