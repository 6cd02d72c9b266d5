#pragma once

#include <span>
#include <string>
#include <vector>

#include "camsim/common.hpp"

namespace camsim {

enum class RadiometricUnit { Radiance, Irradiance };

std::string to_string(RadiometricUnit u);
RadiometricUnit radiometric_unit_from_string(const std::string& s);

/// Sampled spectral plane: band-major, then row-major float32 samples.
/// Radiance is W·sr⁻¹·m⁻²·nm⁻¹, irradiance W·m⁻²·nm⁻¹. `sample_pitch_mm`
/// is the sample spacing on the sensor-conjugate plane.
struct SpectralImage {
    int width = 0;
    int height = 0;
    double wave_start_nm = 400.0;
    double wave_step_nm = 10.0;
    int n_wave = 31;
    double sample_pitch_mm = 0.0;
    RadiometricUnit unit = RadiometricUnit::Radiance;
    std::vector<float> values;  // n_wave * height * width

    SpectralImage() = default;
    SpectralImage(int w, int h, double wave_start, double wave_step, int bands,
                  double pitch_mm, RadiometricUnit u)
        : width(w), height(h), wave_start_nm(wave_start), wave_step_nm(wave_step),
          n_wave(bands), sample_pitch_mm(pitch_mm), unit(u),
          values(size_t(bands) * size_t(h) * size_t(w), 0.0f) {}

    double wavelength(int band) const { return wave_start_nm + band * wave_step_nm; }
    size_t band_offset(int band) const { return size_t(band) * height * width; }
    float* band(int b) { return values.data() + band_offset(b); }
    const float* band(int b) const { return values.data() + band_offset(b); }
    float& at(int b, int row, int col) {
        return values[band_offset(b) + size_t(row) * width + col];
    }
    float at(int b, int row, int col) const {
        return values[band_offset(b) + size_t(row) * width + col];
    }
    size_t sample_count() const { return values.size(); }

    /// Checks the structural invariants (finite, nonnegative, positive
    /// dimensions). Throws format_error on violation.
    void validate() const;
};

/// Spectral power distribution on an arbitrary wavelength grid.
struct Spd {
    std::vector<double> wavelengths_nm;
    std::vector<double> power;

    static Spd uniform_grid(double start_nm, double step_nm, int n,
                            std::span<const double> values);
    double sample(double nm) const;  // linear interpolation, 0 outside grid
};

/// CIE photopic luminous efficiency V(λ), normalized to 1.0 at 555 nm.
/// Linear interpolation of the embedded 10 nm table (plus the 555 knot);
/// zero outside [380, 780] nm.
double photopic_v(double nm);

/// 683 · Σ V(λ)·L(λ)·Δλ over the SPD grid, rectangle rule. For a radiance
/// SPD the result is luminance in cd/m². Throws data_error when the grid
/// does not cover [400, 700] nm.
double luminance(const Spd& spd);

/// Luminance of one pixel's spectrum (cd/m² for radiance images).
double pixel_luminance(const SpectralImage& img, int row, int col);

/// π × mean of per-pixel luminance: the Lambertian-equivalent mean scene
/// illuminance in lux. Requires a radiance-tagged image.
double scene_mean_illuminance(const SpectralImage& scene);

/// Scales all samples by one scalar so scene_mean_illuminance == target.
/// Throws data_error for an all-zero (degenerate) scene.
SpectralImage scale_to_illuminance(SpectralImage scene, double target_lux);

// Built-in illuminants and flat reflectances, sampled on a band grid.
Spd d65_spd(double start_nm, double step_nm, int n);
Spd blackbody_spd(double temperature_k, double start_nm, double step_nm, int n);
Spd flat_spd(double value, double start_nm, double step_nm, int n);

}  // namespace camsim
