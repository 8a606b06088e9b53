#pragma once

#include <cstdint>
#include <vector>

namespace cbir {

/// Row-major grayscale raster with intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // size = width * height

    GrayImage() = default;
    // Validates dimensions, size and the [0,1] intensity bound; throws
    // std::invalid_argument on violation.
    GrayImage(int width, int height, std::vector<double> pixels);

    double at(int col, int row) const {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
    double& at(int col, int row) {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
    bool empty() const { return pixels.empty(); }
};

/// 8-bit raster as decoded from disk. Interleaved RGB when channels == 3,
/// single luma plane when channels == 1.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;  // row-major, interleaved
};

// Luminance conversion 0.299 R + 0.587 G + 0.114 B, scaled to [0, 1].
// Luma input passes through scaled by 1/255.
GrayImage to_gray(const RawImage& raw);

}  // namespace cbir
