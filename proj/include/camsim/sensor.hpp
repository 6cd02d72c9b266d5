#pragma once

#include <array>
#include <string>

#include "camsim/spectral.hpp"

namespace camsim {

enum class CfaChannel : uint8_t { R = 0, G = 1, B = 2 };

/// 2×2 color filter array code, row-major cells.
struct CfaPattern {
    std::array<CfaChannel, 4> cells = {CfaChannel::R, CfaChannel::G,
                                       CfaChannel::G, CfaChannel::B};

    static CfaPattern from_string(const std::string& code);
    std::string to_string() const;
    CfaChannel at(int row, int col) const { return cells[size_t(row % 2) * 2 + (col % 2)]; }
    bool operator==(const CfaPattern&) const = default;
};

/// Per-channel spectral quantum efficiency.
struct QeCurves {
    Spd r, g, b;
    double sample(CfaChannel c, double nm) const;
};
QeCurves default_qe_curves();
QeCurves load_qe_csv(const std::string& path);

struct SensorConfig {
    double pixel_um = 1.4;
    double die_w_mm = 5.64;
    double die_h_mm = 4.23;
    double fill_factor = 1.0;
    QeCurves qe = default_qe_curves();
    CfaPattern cfa;
    double well_capacity_e = 6000.0;
    double conversion_gain_v_per_e = 1.0 / 6000.0;
    double voltage_swing_v = 1.0;
    double read_noise_e = 1.5;
    double dark_current_e_per_s = 0.1;
    int black_level_dn = 64;
    int bit_depth = 10;
    double analog_gain = 1.0;

    void validate() const;
    int pixels_wide() const { return int(die_w_mm / (pixel_um * 1e-3)); }
    int pixels_high() const { return int(die_h_mm / (pixel_um * 1e-3)); }
    double pixel_pitch_mm() const { return pixel_um * 1e-3; }
    int max_dn() const { return (1 << bit_depth) - 1; }
};

struct ExposurePolicy {
    double target_fraction = 0.90;   // of voltage swing
    double max_exposure_s = 0.016;   // 16 ms (60 fps)
    double central_fraction = 1.0 / 3.0;  // central region of width/height

    void validate() const;
};

struct RawImage {
    int width = 0, height = 0;
    std::vector<uint16_t> dn;
    CfaPattern cfa;
    double exposure_time_s = 0.0;
    double saturated_fraction = 0.0;
    int bit_depth = 10;
    int black_level_dn = 64;

    uint16_t at(int row, int col) const { return dn[size_t(row) * width + col]; }
};

/// Mean photo-electrons per pixel for exposure t: box-average of the
/// supersampled irradiance over each pixel footprint, weighted by the
/// pixel's own CFA channel QE. The irradiance pitch must divide the pixel
/// pitch exactly (integer supersampling).
Plane<double> expected_electrons(const SpectralImage& irradiance, const SensorConfig& sensor,
                                 double t_s);

/// Exposure time from the 90%-of-swing policy: peak of the noise-free
/// voltage image over the central region at a probe exposure, rescaled to
/// the target fraction and clamped to max_exposure. Degenerate (all dark)
/// inputs return max_exposure.
double auto_exposure(const SpectralImage& irradiance, const SensorConfig& sensor,
                     const ExposurePolicy& policy);
double auto_exposure_from_rates(const Plane<double>& electron_rate_mosaic,
                                const SensorConfig& sensor, const ExposurePolicy& policy);

/// Full capture: Poisson photon+dark noise, well clipping, Gaussian read
/// noise, voltage clamp, ADC quantization. Byte-deterministic for a given
/// seed regardless of worker count (per-row RNG streams).
RawImage capture(const SpectralImage& irradiance, const SensorConfig& sensor, double t_s,
                 uint64_t seed, int workers = 1);

/// Same noise model applied to a precomputed mean photo-electron plane.
/// If electrons_out is non-null it receives the post-clip electron counts.
RawImage capture_from_expected(const Plane<double>& expected_e, const SensorConfig& sensor,
                               double t_s, uint64_t seed, int workers = 1,
                               Plane<double>* electrons_out = nullptr);

/// All noise disabled: exact quantization of the mean voltage image.
RawImage capture_noise_free(const Plane<double>& expected_e, const SensorConfig& sensor,
                            double t_s);

/// 16-bit little-endian PGM plus JSON sidecar (base + ".pgm"/".json").
void save_raw(const RawImage& raw, const std::string& path_base);
RawImage load_raw(const std::string& path_base);

}  // namespace camsim
