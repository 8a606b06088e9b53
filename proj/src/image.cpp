#include "cbir/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cbir {

GrayImage::GrayImage(int width_, int height_, std::vector<double> pixels_)
    : width(width_), height(height_), pixels(std::move(pixels_)) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("GrayImage: dimensions must be positive, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("GrayImage: pixel count " + std::to_string(pixels.size()) +
                                    " does not match " + std::to_string(width) + "x" +
                                    std::to_string(height));
    }
    for (double v : pixels) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("GrayImage: intensity " + std::to_string(v) +
                                        " outside [0,1]");
        }
    }
}

GrayImage to_gray(const RawImage& raw) {
    if (raw.width <= 0 || raw.height <= 0) {
        throw std::invalid_argument("to_gray: zero-dimension input");
    }
    if (raw.channels != 1 && raw.channels != 3) {
        throw std::invalid_argument("to_gray: unsupported channel count " +
                                    std::to_string(raw.channels));
    }
    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height;
    if (raw.data.size() != count * raw.channels) {
        throw std::invalid_argument("to_gray: data size does not match dimensions");
    }

    std::vector<double> pixels(count);
    if (raw.channels == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            pixels[i] = raw.data[i] / 255.0;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const double r = raw.data[3 * i + 0];
            const double g = raw.data[3 * i + 1];
            const double b = raw.data[3 * i + 2];
            pixels[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
        }
    }
    return GrayImage(raw.width, raw.height, std::move(pixels));
}

}  // namespace cbir
