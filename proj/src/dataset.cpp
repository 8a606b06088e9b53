#include "cbir/dataset.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <iostream>
#include <stdexcept>
#include <utility>

namespace cbir {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    static const char* known[] = {".jpg", ".jpeg", ".png", ".bmp",
                                  ".tif", ".tiff", ".ppm", ".pgm"};
    return std::any_of(std::begin(known), std::end(known),
                       [&](const char* k) { return ext == k; });
}

bool is_numeric_stem(const std::string& stem) {
    return !stem.empty() && std::all_of(stem.begin(), stem.end(), [](unsigned char c) {
        return std::isdigit(c);
    });
}

void check_readable(const fs::path& file) {
    std::error_code ec;
    const auto size = fs::file_size(file, ec);
    if (ec || size == 0) {
        throw std::runtime_error("unreadable image file: " + file.string());
    }
}

Corpus finish_corpus(std::vector<std::pair<std::string, std::vector<fs::path>>> categories) {
    Corpus corpus;
    int next_id = 1;
    for (std::size_t c = 0; c < categories.size(); ++c) {
        auto& [name, files] = categories[c];
        if (files.empty()) {
            throw std::runtime_error("empty category: " + name);
        }
        CategoryEntry cat;
        cat.id = static_cast<int>(c) + 1;
        cat.name = std::move(name);
        for (const fs::path& file : files) {
            check_readable(file);
            cat.image_ids.push_back(next_id);
            corpus.images.push_back({next_id, cat.id, file.string()});
            ++next_id;
        }
        corpus.categories.push_back(std::move(cat));
    }
    return corpus;
}

Corpus load_corel_flat(const fs::path& root) {
    std::vector<std::pair<long, fs::path>> numbered;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file() || !has_image_extension(entry.path())) {
            continue;
        }
        const std::string stem = entry.path().stem().string();
        if (!is_numeric_stem(stem)) {
            continue;
        }
        numbered.emplace_back(std::stol(stem), entry.path());
    }
    if (numbered.empty()) {
        throw std::runtime_error("no numbered image files in " + root.string());
    }
    std::sort(numbered.begin(), numbered.end());

    // category = k / 100 + 1; every category below the largest must be present
    const int category_count = static_cast<int>(numbered.back().first / 100) + 1;
    std::vector<std::pair<std::string, std::vector<fs::path>>> categories(category_count);
    for (int c = 0; c < category_count; ++c) {
        categories[c].first = "category_" + std::to_string(c + 1);
    }
    for (const auto& [k, file] : numbered) {
        categories[static_cast<std::size_t>(k / 100)].second.push_back(file);
    }
    return finish_corpus(std::move(categories));
}

Corpus load_category_folders(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            dirs.push_back(entry.path());
        }
    }
    if (dirs.empty()) {
        throw std::runtime_error("no category folders in " + root.string());
    }
    std::sort(dirs.begin(), dirs.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.filename().string() < b.filename().string();
              });

    std::vector<std::pair<std::string, std::vector<fs::path>>> categories;
    for (const fs::path& dir : dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && has_image_extension(entry.path())) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) {
                      return a.filename().string() < b.filename().string();
                  });
        categories.emplace_back(dir.filename().string(), std::move(files));
    }
    return finish_corpus(std::move(categories));
}

// splitmix64; fixed algorithm so splits reproduce across platforms
std::uint64_t mix_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

const ImageEntry& Corpus::entry(int image_id) const {
    if (image_id < 1 || image_id > size()) {
        throw std::out_of_range("no image with id " + std::to_string(image_id));
    }
    return images[static_cast<std::size_t>(image_id) - 1];
}

Corpus load_corpus(const fs::path& root, CorpusLayout layout) {
    if (!fs::is_directory(root)) {
        throw std::runtime_error("corpus directory missing: " + root.string());
    }
    if (layout == CorpusLayout::Auto) {
        const bool has_subdir = std::any_of(
            fs::directory_iterator(root), fs::directory_iterator{},
            [](const fs::directory_entry& e) { return e.is_directory(); });
        layout = has_subdir ? CorpusLayout::CategoryFolders : CorpusLayout::CorelFlat;
    }
    return layout == CorpusLayout::CorelFlat ? load_corel_flat(root)
                                             : load_category_folders(root);
}

RawImage decode_image(const fs::path& file) {
    cv::Mat img = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) {
        throw std::runtime_error("cannot decode image: " + file.string());
    }
    if (img.depth() != CV_8U) {
        throw std::runtime_error("unsupported bit depth (want 8-bit): " + file.string());
    }
    if (img.channels() != 1 && img.channels() != 3 && img.channels() != 4) {
        throw std::runtime_error("unsupported channel count (" +
                                 std::to_string(img.channels()) + "): " + file.string());
    }
    if (img.channels() == 4) {
        cv::Mat bgr(img.rows, img.cols, CV_8UC3);
        const int from_to[] = {0, 0, 1, 1, 2, 2};
        cv::mixChannels(&img, 1, &bgr, 1, from_to, 3);
        img = bgr;
    }

    RawImage raw;
    raw.width = img.cols;
    raw.height = img.rows;
    raw.channels = img.channels() == 1 ? 1 : 3;

    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height;
    raw.data.resize(count * raw.channels);
    if (raw.channels == 1) {
        for (int r = 0; r < img.rows; ++r) {
            const auto* src = img.ptr<std::uint8_t>(r);
            std::copy(src, src + img.cols, raw.data.begin() + static_cast<std::size_t>(r) * img.cols);
        }
    } else {
        for (int r = 0; r < img.rows; ++r) {
            const auto* src = img.ptr<cv::Vec3b>(r);
            for (int c = 0; c < img.cols; ++c) {
                const std::size_t i = (static_cast<std::size_t>(r) * img.cols + c) * 3;
                raw.data[i + 0] = src[c][2];  // imread is BGR
                raw.data[i + 1] = src[c][1];
                raw.data[i + 2] = src[c][0];
            }
        }
    }
    return raw;
}

GrayImage load_gray(const fs::path& file) { return to_gray(decode_image(file)); }

ImageLoader file_loader() {
    return [](const ImageEntry& entry) { return load_gray(entry.path); };
}

bool Split::is_train(int image_id) const {
    return std::binary_search(train_ids.begin(), train_ids.end(), image_id);
}

Split make_split(const Corpus& corpus, std::uint64_t seed) {
    Split split;
    split.seed = seed;
    for (const CategoryEntry& cat : corpus.categories) {
        if (cat.image_ids.size() < 2) {
            std::cerr << "warning: category " << cat.id << " has "
                      << cat.image_ids.size() << " image(s); its test half is empty\n";
            if (cat.image_ids.empty()) {
                continue;
            }
        }
        std::vector<int> ids = cat.image_ids;
        std::uint64_t state = seed ^ (0xA24BAED4963EE407ULL * static_cast<std::uint64_t>(cat.id));
        for (std::size_t i = ids.size() - 1; i > 0; --i) {
            const std::size_t j = mix_next(state) % (i + 1);
            std::swap(ids[i], ids[j]);
        }
        const std::size_t train_count = (ids.size() + 1) / 2;
        split.train_ids.insert(split.train_ids.end(), ids.begin(), ids.begin() + train_count);
        split.test_ids.insert(split.test_ids.end(), ids.begin() + train_count, ids.end());
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

}  // namespace cbir
