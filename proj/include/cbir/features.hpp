#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cbir/dataset.hpp"
#include "cbir/zernike.hpp"

namespace cbir {

/// One feature-table row: the stored descriptor of an indexed image.
struct FeatureRow {
    int image_id = 0;
    int category_id = 0;
    std::vector<double> values;  // |A_pq| per configured index, channel order
};

// Extracts features for the given image ids. Result order matches the
// image_ids order regardless of scheduling; threads = 0 picks the hardware
// count.
std::vector<FeatureRow> extract_feature_table(const Corpus& corpus,
                                              std::span<const int> image_ids,
                                              std::span<const MomentIndex> indices,
                                              const ImageLoader& loader,
                                              int threads = 0);

// Delimited-text export: header image_id,category_id,<label>... (labels from
// feature_label) then one row per image matching the index-list order.
void write_feature_csv(std::ostream& out, std::span<const MomentIndex> indices,
                       std::span<const FeatureRow> rows);

}  // namespace cbir
