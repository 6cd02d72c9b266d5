#pragma once

#include <array>
#include <optional>
#include <string>

#include "camsim/sensor.hpp"

namespace camsim {

/// Linear RGB planes in [0, 1], produced by the demosaicker.
struct LinearRgb {
    Plane<float> r, g, b;
    int width() const { return r.width(); }
    int height() const { return r.height(); }
};

/// 8-bit display-referred image handed to detectors.
struct RgbImage {
    int width = 0, height = 0;
    std::vector<uint8_t> rgb;  // interleaved, 3 bytes per pixel
    std::string scene_id, camera_id;
    double exposure_time_s = 0.0;

    uint8_t at(int row, int col, int ch) const {
        return rgb[(size_t(row) * width + col) * 3 + ch];
    }
};

/// Black-level subtraction, normalization to [0,1], bilinear per-channel
/// interpolation with replicated borders.
LinearRgb demosaic(const RawImage& raw);

using ColorMatrix = std::array<std::array<double, 3>, 3>;

struct DisplayParams {
    /// When unset, a per-image gray-world white balance diagonal is used.
    std::optional<ColorMatrix> color_matrix;
    double gamma = 2.2;
};

/// 3×3 color matrix, clip to [0,1], gamma encode, quantize to 8 bits.
RgbImage render_display(const LinearRgb& linear, const DisplayParams& params = {});

/// PNG (8-bit RGB) plus JSON metadata sidecar (base + ".png"/".json").
void save_rgb(const RgbImage& image, const std::string& path_base);

}  // namespace camsim
