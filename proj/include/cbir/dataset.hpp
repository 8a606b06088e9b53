#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cbir/image.hpp"

namespace cbir {

enum class CorpusLayout {
    Auto,             // CategoryFolders if the root has subdirectories, else CorelFlat
    CorelFlat,        // files k.jpg (k = 0..), category = k / 100 + 1
    CategoryFolders,  // one folder per category, ordered lexicographically
};

struct ImageEntry {
    int id = 0;           // 1-based, globally unique
    int category_id = 0;  // 1-based
    std::string path;     // empty for in-memory corpora
};

struct CategoryEntry {
    int id = 0;
    std::string name;
    std::vector<int> image_ids;  // ascending
};

/// Category-structured image corpus with a stable ordering that does not
/// depend on filesystem enumeration order.
struct Corpus {
    std::vector<CategoryEntry> categories;
    std::vector<ImageEntry> images;  // ordered by id; ids are contiguous 1..size

    const ImageEntry& entry(int image_id) const;
    int category_of(int image_id) const { return entry(image_id).category_id; }
    int size() const { return static_cast<int>(images.size()); }
};

Corpus load_corpus(const std::filesystem::path& root,
                   CorpusLayout layout = CorpusLayout::Auto);

// Decodes an 8-bit PNG/JPEG (or other common raster) from disk.
RawImage decode_image(const std::filesystem::path& file);
GrayImage load_gray(const std::filesystem::path& file);

// Pixel source used by feature extraction; tests may supply in-memory images.
using ImageLoader = std::function<GrayImage(const ImageEntry&)>;
ImageLoader file_loader();

/// Deterministic per-category train/test partition.
struct Split {
    std::vector<int> train_ids;  // sorted
    std::vector<int> test_ids;   // sorted
    std::uint64_t seed = 0;

    bool is_train(int image_id) const;
};

// Stratified halves: per category |train| = ceil(M/2), |test| = floor(M/2).
// Identical (corpus, seed) inputs give identical splits on every platform.
Split make_split(const Corpus& corpus, std::uint64_t seed);

}  // namespace cbir
