#pragma once

#include <utility>
#include <vector>

#include "camsim/camera.hpp"
#include "camsim/scene.hpp"

namespace camsim {

enum class MtfChannel { GreenDemosaic, GreenRaw, Luma };

struct MtfOptions {
    MtfChannel channel = MtfChannel::GreenDemosaic;
    int window_px = 96;              // edge target size in camera pixels
    double exposure_fraction = 0.7;  // noise-free peak level for the fixed exposure
    int oversample = 4;              // ESF binning factor
};

struct MtfResult {
    double mtf50_cyc_per_mm = 0.0;
    bool extrapolated = false;  // no 0.5 crossing below the pixel Nyquist
    double edge_angle_deg = 0.0;
    std::vector<std::pair<double, double>> curve;  // (cycles/mm, modulation)
};

/// Slanted-edge MTF50 of the full camera pipeline: edge scene → diffraction
/// optics → sensor (noise disabled, fixed mid-range exposure) → demosaic,
/// then edge-angle estimation, 4× oversampled ESF, windowed LSF, DFT, and
/// the first 0.5 crossing converted to cycles/mm. Deterministic.
MtfResult measure_mtf50(const CameraConfig& camera, const RenderConfig& scene_cfg,
                        const MtfOptions& options = {});

/// Closed-form product of the diffraction OTF and the pixel-aperture MTF at
/// one wavelength; the 0.5 crossing is solved by bisection. No demosaic
/// term, so it upper-bounds the slanted-edge measurement.
double analytic_mtf50(const OpticsConfig& optics, double pixel_um, double lambda_nm = 550.0);

/// ISO-style slanted-edge analysis of a linear image region containing a
/// near-vertical edge. The samples are (value, row, col) pixel triples.
struct EdgeSample {
    double value;
    double row;
    double col;
};
MtfResult slanted_edge_mtf(const std::vector<EdgeSample>& samples, int width, int height,
                           double pixel_pitch_mm, int oversample);

void save_mtf_csv(const MtfResult& result, const std::string& path);

}  // namespace camsim
