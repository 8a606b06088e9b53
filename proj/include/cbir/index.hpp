#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cbir/dataset.hpp"
#include "cbir/features.hpp"
#include "cbir/zernike.hpp"

namespace cbir {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Per-category bounds of one feature channel: interval [lower, upper] with
/// its center and radius.
struct CategoryStats {
    int category_id = 0;
    double lower = 0;
    double upper = 0;
    double center = 0;  // (lower + upper) / 2
    double radius = 0;  // (upper - lower) / 2
};

// lower = min(values), upper = max(values). Throws std::invalid_argument on
// an empty list or a non-finite value.
CategoryStats build_category_stats(int category_id, std::span<const double> values);

/// Offline statistics of one feature channel: per-category intervals plus
/// the maximum category radius.
struct FeatureChannelIndex {
    MomentIndex feature;
    std::vector<CategoryStats> stats;  // one per category, by category id
    double max_radius = 0;
};

/// The complete offline artifact: channel statistics plus the stored
/// per-image feature table, so queries need no recomputation over the
/// database. Immutable once built; safe for concurrent readers.
struct PrefilterIndex {
    std::uint64_t split_seed = 0;
    bool train_only = true;
    std::vector<MomentIndex> features;       // channel order
    std::vector<FeatureChannelIndex> channels;
    std::vector<FeatureRow> image_features;  // ordered by image id

    int channel_count() const { return static_cast<int>(channels.size()); }
    // Position of an image id in image_features, or -1.
    int row_of(int image_id) const;
};

struct BuildOptions {
    bool train_only = true;  // statistics and table from the train half only
    int threads = 0;
};

PrefilterIndex build_index(const Corpus& corpus, const Split& split,
                           std::span<const MomentIndex> indices,
                           const ImageLoader& loader,
                           const BuildOptions& options = {});

// Self-describing binary file; identical inputs serialize to identical
// bytes and numeric fields round-trip bit-exactly. Truncation, version
// drift and payload corruption are reported as errors.
void save_index(const PrefilterIndex& index, const std::filesystem::path& path);
PrefilterIndex load_index(const std::filesystem::path& path);

}  // namespace cbir
