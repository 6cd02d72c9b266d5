#include "camsim/spectral.hpp"

#include <cmath>

namespace camsim {

std::string to_string(RadiometricUnit u) {
    return u == RadiometricUnit::Radiance ? "radiance" : "irradiance";
}

RadiometricUnit radiometric_unit_from_string(const std::string& s) {
    if (s == "radiance") return RadiometricUnit::Radiance;
    if (s == "irradiance") return RadiometricUnit::Irradiance;
    throw format_error("unknown radiometric unit: " + s);
}

void SpectralImage::validate() const {
    if (width <= 0 || height <= 0 || n_wave < 1)
        throw format_error("spectral image has empty dimensions");
    if (!(wave_step_nm > 0.0) || !(sample_pitch_mm > 0.0))
        throw format_error("spectral image has non-positive grid steps");
    if (values.size() != size_t(n_wave) * size_t(height) * size_t(width))
        throw format_error("spectral image payload size mismatch");
    for (float v : values) {
        if (!std::isfinite(v) || v < 0.0f)
            throw format_error("spectral image contains non-finite or negative samples");
    }
}

Spd Spd::uniform_grid(double start_nm, double step_nm, int n,
                      std::span<const double> values) {
    Spd out;
    out.wavelengths_nm.resize(n);
    out.power.assign(values.begin(), values.end());
    for (int i = 0; i < n; ++i) out.wavelengths_nm[i] = start_nm + i * step_nm;
    return out;
}

double Spd::sample(double nm) const {
    if (wavelengths_nm.empty()) return 0.0;
    if (nm <= wavelengths_nm.front()) return nm == wavelengths_nm.front() ? power.front() : 0.0;
    if (nm >= wavelengths_nm.back()) return nm == wavelengths_nm.back() ? power.back() : 0.0;
    for (size_t i = 1; i < wavelengths_nm.size(); ++i) {
        if (nm <= wavelengths_nm[i]) {
            const double t = (nm - wavelengths_nm[i - 1]) /
                             (wavelengths_nm[i] - wavelengths_nm[i - 1]);
            return power[i - 1] + t * (power[i] - power[i - 1]);
        }
    }
    return 0.0;
}

double luminance(const Spd& spd) {
    if (spd.wavelengths_nm.size() < 2)
        throw data_error("luminance: SPD needs at least two samples");
    if (spd.wavelengths_nm.front() > 400.0 || spd.wavelengths_nm.back() < 700.0)
        throw data_error("luminance: SPD grid does not cover [400, 700] nm");
    double acc = 0.0;
    for (size_t i = 0; i < spd.wavelengths_nm.size(); ++i) {
        const double step = i + 1 < spd.wavelengths_nm.size()
                                ? spd.wavelengths_nm[i + 1] - spd.wavelengths_nm[i]
                                : spd.wavelengths_nm[i] - spd.wavelengths_nm[i - 1];
        acc += photopic_v(spd.wavelengths_nm[i]) * spd.power[i] * step;
    }
    return 683.0 * acc;
}

double pixel_luminance(const SpectralImage& img, int row, int col) {
    double acc = 0.0;
    for (int b = 0; b < img.n_wave; ++b) {
        acc += photopic_v(img.wavelength(b)) * img.at(b, row, col);
    }
    return 683.0 * acc * img.wave_step_nm;
}

double scene_mean_illuminance(const SpectralImage& scene) {
    if (scene.unit != RadiometricUnit::Radiance)
        throw data_error("scene_mean_illuminance requires a radiance-tagged image");
    if (scene.wavelength(0) > 400.0 || scene.wavelength(scene.n_wave - 1) < 700.0)
        throw data_error("scene_mean_illuminance: band grid does not cover [400, 700] nm");
    // Band-major accumulation: one V(λ) weight per plane.
    double acc = 0.0;
    const size_t plane = size_t(scene.width) * scene.height;
    for (int b = 0; b < scene.n_wave; ++b) {
        const double w = photopic_v(scene.wavelength(b));
        if (w == 0.0) continue;
        const float* p = scene.band(b);
        double band_sum = 0.0;
        for (size_t i = 0; i < plane; ++i) band_sum += p[i];
        acc += w * band_sum;
    }
    const double mean_luminance = 683.0 * acc * scene.wave_step_nm / double(plane);
    return M_PI * mean_luminance;
}

SpectralImage scale_to_illuminance(SpectralImage scene, double target_lux) {
    const double current = scene_mean_illuminance(scene);
    if (!(current > 0.0)) throw data_error("scale_to_illuminance: degenerate all-zero scene");
    const float k = float(target_lux / current);
    for (auto& v : scene.values) v *= k;
    return scene;
}

}  // namespace camsim
