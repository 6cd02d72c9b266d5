#pragma once

#include <optional>

#include "camsim/camera.hpp"
#include "camsim/scene.hpp"

namespace camsim {

/// Per-pixel photo-electron rates (e⁻/s) for each CFA channel, i.e. the
/// value expected_electrons would produce per unit exposure if the pixel
/// carried that channel's filter.
struct ChannelRates {
    Plane<double> r, g, b;
    int width() const { return r.width(); }
    int height() const { return r.height(); }

    Plane<double> mosaic(const CfaPattern& cfa) const {
        Plane<double> out(r.width(), r.height());
        const Plane<double>* planes[3] = {&r, &g, &b};
        for (int row = 0; row < r.height(); ++row)
            for (int col = 0; col < r.width(); ++col)
                out.at(row, col) = planes[int(cfa.at(row, col))]->at(row, col);
        return out;
    }
};

struct FastRenderResult {
    ChannelRates full;
    /// Present when the scene has emissive patches: the same render with
    /// the patches replaced by the body beneath them. The exposure policy
    /// meters on this.
    std::optional<ChannelRates> ambient;
};

/// Fused scene→optics→sensor expectation for patch scenes: each layer mask
/// is filtered once per channel by a radial kernel combining the camera
/// equation, per-wavelength diffraction OTF, and the channel's spectral
/// response. Mathematically identical to rasterize_scene → apply_optics →
/// expected_electrons at the same pitch, up to rounding; far fewer FFTs.
FastRenderResult render_scene_electron_rates(const SceneLayout& layout,
                                             const OpticsConfig& optics,
                                             const SensorConfig& sensor, int supersample);

/// Smallest supersampling factor ≥ floor_factor whose grid Nyquist clears
/// the diffraction cutoff of the shortest band.
int adaptive_supersample(double pixel_um, double f_number, double wave_start_nm,
                         int floor_factor = 4);

}  // namespace camsim
