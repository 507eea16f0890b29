#pragma once

#include <string>
#include <vector>

namespace augscale {

// Dense float raster in [0,1], row-major, channel-interleaved.
// 1 channel (grayscale) or 3 channels (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t size() const { return data.size(); }
};

// Invariant check shared by tests: dimensions positive, channels 1 or 3,
// data length width*height*channels, every value finite and in [0,1].
bool image_valid(const Image& img, std::string* why = nullptr);

// Binary PGM (P5) / PPM (P6), 8-bit, maxval 255. Pixel byte v maps to v/255.
// Throws DataError whose message names the defect: "unsupported format",
// "malformed header", "unsupported maxval", "truncated payload".
Image load_image(const std::string& path);

// Writes P5 for 1-channel, P6 for 3-channel; byte = round(v*255) clamped.
// Throws DataError on unwritable paths.
void save_image(const Image& img, const std::string& path);

// Bilinear resampling with half-pixel-centered mapping. Output stays inside
// the source value range (convex interpolation). Throws UsageError on a
// zero-sized target.
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace augscale
