#include "cbir/features.hpp"

#include <ostream>

#include "cbir/bench.hpp"
#include "cbir/parallel.hpp"

namespace cbir {

std::vector<FeatureRow> extract_feature_table(const Corpus& corpus,
                                              std::span<const int> image_ids,
                                              std::span<const MomentIndex> indices,
                                              const ImageLoader& loader,
                                              int threads) {
    std::vector<FeatureRow> rows(image_ids.size());
    parallel_for(static_cast<int>(image_ids.size()), threads, [&](int i) {
        const ImageEntry& entry = corpus.entry(image_ids[static_cast<std::size_t>(i)]);
        const FeatureVector fv = extract_features(loader(entry), indices);
        rows[static_cast<std::size_t>(i)] = {entry.id, entry.category_id, fv.values};
    });
    return rows;
}

void write_feature_csv(std::ostream& out, std::span<const MomentIndex> indices,
                       std::span<const FeatureRow> rows) {
    out << "image_id,category_id";
    for (const MomentIndex& idx : indices) {
        out << ',' << feature_label(idx);
    }
    out << '\n';
    for (const FeatureRow& row : rows) {
        out << row.image_id << ',' << row.category_id;
        for (double v : row.values) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

}  // namespace cbir
