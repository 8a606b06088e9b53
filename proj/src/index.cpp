#include "cbir/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace cbir {

namespace {

constexpr char kMagic[4] = {'P', 'Z', 'I', 'X'};

void append_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void append_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void append_i32(std::string& buf, std::int32_t v) {
    append_u32(buf, static_cast<std::uint32_t>(v));
}

void append_f64(std::string& buf, double v) {
    append_u64(buf, std::bit_cast<std::uint64_t>(v));
}

/// Bounds-checked little-endian reader; any overrun means a truncated file.
class Reader {
public:
    explicit Reader(const std::string& data) : data_(data) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            throw std::runtime_error("index file truncated");
        }
    }

    const std::string& data_;
    std::size_t pos_ = 0;
};

std::uint32_t payload_crc(const std::string& payload) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size())));
}

}  // namespace

CategoryStats build_category_stats(int category_id, std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("build_category_stats: empty value list for category " +
                                    std::to_string(category_id));
    }
    CategoryStats stats;
    stats.category_id = category_id;
    stats.lower = values[0];
    stats.upper = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("build_category_stats: non-finite value in category " +
                                        std::to_string(category_id));
        }
        stats.lower = std::min(stats.lower, v);
        stats.upper = std::max(stats.upper, v);
    }
    stats.center = (stats.lower + stats.upper) / 2.0;
    stats.radius = (stats.upper - stats.lower) / 2.0;
    return stats;
}

int PrefilterIndex::row_of(int image_id) const {
    const auto it = std::lower_bound(
        image_features.begin(), image_features.end(), image_id,
        [](const FeatureRow& row, int id) { return row.image_id < id; });
    if (it == image_features.end() || it->image_id != image_id) {
        return -1;
    }
    return static_cast<int>(it - image_features.begin());
}

PrefilterIndex build_index(const Corpus& corpus, const Split& split,
                           std::span<const MomentIndex> indices,
                           const ImageLoader& loader, const BuildOptions& options) {
    if (indices.empty()) {
        throw std::invalid_argument("build_index: no feature indices configured");
    }

    std::vector<int> indexed_ids;
    if (options.train_only) {
        indexed_ids = split.train_ids;
    } else {
        indexed_ids.resize(static_cast<std::size_t>(corpus.size()));
        for (int i = 0; i < corpus.size(); ++i) {
            indexed_ids[static_cast<std::size_t>(i)] = i + 1;
        }
    }

    PrefilterIndex index;
    index.split_seed = split.seed;
    index.train_only = options.train_only;
    index.features.assign(indices.begin(), indices.end());
    index.image_features =
        extract_feature_table(corpus, indexed_ids, indices, loader, options.threads);

    for (std::size_t ch = 0; ch < indices.size(); ++ch) {
        FeatureChannelIndex channel;
        channel.feature = indices[ch];
        for (const CategoryEntry& cat : corpus.categories) {
            std::vector<double> values;
            for (const FeatureRow& row : index.image_features) {
                if (row.category_id == cat.id) {
                    values.push_back(row.values[ch]);
                }
            }
            if (values.empty()) {
                throw std::runtime_error("build_index: category " + std::to_string(cat.id) +
                                         " has no indexed images");
            }
            channel.stats.push_back(build_category_stats(cat.id, values));
        }
        channel.max_radius = 0.0;
        for (const CategoryStats& s : channel.stats) {
            channel.max_radius = std::max(channel.max_radius, s.radius);
        }
        index.channels.push_back(std::move(channel));
    }
    return index;
}

void save_index(const PrefilterIndex& index, const std::filesystem::path& path) {
    std::string payload;
    payload.append(kMagic, sizeof(kMagic));
    append_u32(payload, kIndexFormatVersion);
    append_u64(payload, index.split_seed);
    payload.push_back(index.train_only ? 1 : 0);

    append_u32(payload, static_cast<std::uint32_t>(index.features.size()));
    for (const MomentIndex& mi : index.features) {
        append_i32(payload, mi.order);
        append_i32(payload, mi.repetition);
    }

    const std::uint32_t category_count =
        index.channels.empty() ? 0 : static_cast<std::uint32_t>(index.channels[0].stats.size());
    append_u32(payload, category_count);
    for (const FeatureChannelIndex& channel : index.channels) {
        if (channel.stats.size() != category_count) {
            throw std::invalid_argument("save_index: channels differ in category coverage");
        }
        for (const CategoryStats& s : channel.stats) {
            append_i32(payload, s.category_id);
            append_f64(payload, s.lower);
            append_f64(payload, s.upper);
            append_f64(payload, s.center);
            append_f64(payload, s.radius);
        }
        append_f64(payload, channel.max_radius);
    }

    append_u64(payload, index.image_features.size());
    for (const FeatureRow& row : index.image_features) {
        if (row.values.size() != index.features.size()) {
            throw std::invalid_argument("save_index: feature row width mismatch");
        }
        append_i32(payload, row.image_id);
        append_i32(payload, row.category_id);
        for (double v : row.values) {
            append_f64(payload, v);
        }
    }

    const std::uint32_t crc = payload_crc(payload);
    append_u32(payload, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

PrefilterIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open index file: " + path.string());
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < sizeof(kMagic) + 4 + 4) {
        throw std::runtime_error("index file truncated");
    }
    if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not an index file (bad magic): " + path.string());
    }

    const std::string body = data.substr(0, data.size() - 4);
    Reader r(body);
    r.u32();  // magic, already verified

    // version before checksum: a future format may lay the trailer out
    // differently, so its checksum cannot be judged here
    const std::uint32_t version = r.u32();
    if (version != kIndexFormatVersion) {
        throw std::runtime_error("unsupported index format version " + std::to_string(version));
    }

    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) {
        stored_crc |= static_cast<std::uint32_t>(
                          static_cast<unsigned char>(data[data.size() - 4 + i]))
                      << (8 * i);
    }
    if (stored_crc != payload_crc(body)) {
        throw std::runtime_error("index file checksum mismatch: " + path.string());
    }

    PrefilterIndex index;
    index.split_seed = r.u64();
    index.train_only = r.u8() != 0;

    const std::uint32_t feature_count = r.u32();
    for (std::uint32_t i = 0; i < feature_count; ++i) {
        MomentIndex mi;
        mi.order = r.i32();
        mi.repetition = r.i32();
        index.features.push_back(mi);
    }

    const std::uint32_t category_count = r.u32();
    for (std::uint32_t ch = 0; ch < feature_count; ++ch) {
        FeatureChannelIndex channel;
        channel.feature = index.features[ch];
        for (std::uint32_t c = 0; c < category_count; ++c) {
            CategoryStats s;
            s.category_id = r.i32();
            s.lower = r.f64();
            s.upper = r.f64();
            s.center = r.f64();
            s.radius = r.f64();
            channel.stats.push_back(s);
        }
        channel.max_radius = r.f64();
        index.channels.push_back(std::move(channel));
    }

    const std::uint64_t image_count = r.u64();
    if (image_count > body.size() / 8) {
        throw std::runtime_error("index file truncated");
    }
    index.image_features.reserve(image_count);
    for (std::uint64_t i = 0; i < image_count; ++i) {
        FeatureRow row;
        row.image_id = r.i32();
        row.category_id = r.i32();
        row.values.resize(feature_count);
        for (std::uint32_t ch = 0; ch < feature_count; ++ch) {
            row.values[ch] = r.f64();
        }
        index.image_features.push_back(std::move(row));
    }

    if (r.pos() != body.size()) {
        throw std::runtime_error("index file has trailing bytes: " + path.string());
    }
    return index;
}

}  // namespace cbir
