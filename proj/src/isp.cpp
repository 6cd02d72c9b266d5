#include "camsim/isp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace camsim {

namespace {

// Bilinear CFA interpolation. The 2×2 pattern tells where the wanted
// channel lives relative to (row, col): the same site, the horizontal or
// vertical neighbors, both (green at an R/B site), or the diagonals.
// Borders replicate.
float site_average(const Plane<float>& v, const RawImage& raw, CfaChannel want, int row,
                   int col) {
    auto value = [&](int r, int c) {
        r = std::clamp(r, 0, raw.height - 1);
        c = std::clamp(c, 0, raw.width - 1);
        return v.at(r, c);
    };
    if (raw.cfa.at(row, col) == want) return value(row, col);

    const bool horiz = raw.cfa.at(row, col + 1) == want;
    const bool vert = raw.cfa.at(row + 1, col) == want;
    if (horiz && vert)
        return 0.25f * (value(row - 1, col) + value(row + 1, col) + value(row, col - 1) +
                        value(row, col + 1));
    if (horiz) return 0.5f * (value(row, col - 1) + value(row, col + 1));
    if (vert) return 0.5f * (value(row - 1, col) + value(row + 1, col));
    return 0.25f * (value(row - 1, col - 1) + value(row - 1, col + 1) +
                    value(row + 1, col - 1) + value(row + 1, col + 1));
}

}  // namespace

LinearRgb demosaic(const RawImage& raw) {
    {
        // Reject CFA codes that do not contain all three channels.
        bool has[3] = {false, false, false};
        for (auto c : raw.cfa.cells) has[int(c)] = true;
        if (!has[0] || !has[1] || !has[2])
            throw data_error("demosaic: cfa pattern lacks a channel: " + raw.cfa.to_string());
    }
    const double span = double((1 << raw.bit_depth) - 1 - raw.black_level_dn);

    Plane<float> norm(raw.width, raw.height);
    for (size_t i = 0; i < raw.dn.size(); ++i) {
        const double v = (double(raw.dn[i]) - raw.black_level_dn) / span;
        norm.data()[i] = float(std::max(0.0, v));
    }

    LinearRgb out;
    out.r = Plane<float>(raw.width, raw.height);
    out.g = Plane<float>(raw.width, raw.height);
    out.b = Plane<float>(raw.width, raw.height);
    for (int r = 0; r < raw.height; ++r) {
        for (int c = 0; c < raw.width; ++c) {
            out.r.at(r, c) = site_average(norm, raw, CfaChannel::R, r, c);
            out.g.at(r, c) = site_average(norm, raw, CfaChannel::G, r, c);
            out.b.at(r, c) = site_average(norm, raw, CfaChannel::B, r, c);
        }
    }
    return out;
}

RgbImage render_display(const LinearRgb& linear, const DisplayParams& params) {
    if (!(params.gamma > 0.0)) throw config_error("render_display: gamma must be positive");

    ColorMatrix m;
    if (params.color_matrix) {
        m = *params.color_matrix;
        const auto& a = m;
        const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        if (std::fabs(det) < 1e-12)
            throw config_error("render_display: singular color matrix");
    } else {
        // Gray-world white balance as a diagonal matrix, identity color.
        double mean[3] = {0, 0, 0};
        const size_t n = linear.r.size();
        for (size_t i = 0; i < n; ++i) {
            mean[0] += linear.r.data()[i];
            mean[1] += linear.g.data()[i];
            mean[2] += linear.b.data()[i];
        }
        const double overall = (mean[0] + mean[1] + mean[2]) / 3.0;
        m = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        for (int c = 0; c < 3; ++c)
            m[c][c] = mean[c] > 0.0 ? overall / mean[c] : 1.0;
    }

    RgbImage out;
    out.width = linear.width();
    out.height = linear.height();
    out.rgb.resize(size_t(out.width) * out.height * 3);

    const double inv_gamma = 1.0 / params.gamma;
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const double in[3] = {linear.r.at(r, c), linear.g.at(r, c), linear.b.at(r, c)};
            for (int ch = 0; ch < 3; ++ch) {
                double v = m[ch][0] * in[0] + m[ch][1] * in[1] + m[ch][2] * in[2];
                v = std::clamp(v, 0.0, 1.0);
                v = std::pow(v, inv_gamma);
                out.rgb[(size_t(r) * out.width + c) * 3 + ch] =
                    uint8_t(std::lround(v * 255.0));
            }
        }
    }
    return out;
}

void write_png_rgb8(const std::string& path, int width, int height, const uint8_t* rgb);

void save_rgb(const RgbImage& image, const std::string& path_base) {
    write_png_rgb8(path_base + ".png", image.width, image.height, image.rgb.data());
    nlohmann::json j;
    j["scene_id"] = image.scene_id;
    j["camera_id"] = image.camera_id;
    j["exposure_time_s"] = image.exposure_time_s;
    j["width"] = image.width;
    j["height"] = image.height;
    std::ofstream out(path_base + ".json", std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path_base + ".json");
    out << j.dump(2) << "\n";
}

}  // namespace camsim
