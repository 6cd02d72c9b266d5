#pragma once

#include <string>
#include <vector>

#include "camsim/spectral.hpp"

namespace camsim {

struct OpticsConfig {
    double f_number = 2.4;
    double focal_length_mm = 6.0;
    double transmittance = 1.0;     // in (0, 1]
    bool relative_illumination = false;  // cos^4 field falloff

    void validate() const;
};

/// Diffraction-limited OTF of a circular aperture at spatial frequency f
/// (cycles/mm) and wavelength lambda_nm: (2/π)(φ − cosφ·sinφ) with
/// φ = arccos(f/fc), fc = 1/(λ·N). Exactly 1 at f = 0 and 0 at f ≥ fc.
double diffraction_otf(double f_cyc_per_mm, double lambda_nm, double f_number);

/// Diffraction cutoff frequency 1/(λ·N) in cycles/mm.
double diffraction_cutoff(double lambda_nm, double f_number);

/// Camera-equation scale π·T/(4·N²) mapping scene radiance to sensor-plane
/// irradiance for a distant object.
double radiance_to_irradiance_scale(double f_number, double transmittance);

struct OpticsResult {
    SpectralImage irradiance;
    int64_t clamped_negative_samples = 0;  // samples below -1e-9 × band max
};

/// Scene radiance → sensor irradiance: per band, scales by the camera
/// equation and filters by the diffraction OTF at that band's wavelength
/// (frequency domain, mirror padding). Refuses grids whose Nyquist rate is
/// below the cutoff of the shortest band.
OpticsResult apply_optics(const SpectralImage& scene, const OpticsConfig& optics);

/// Writes (frequency, modulation) rows for each requested wavelength.
void export_otf_csv(const std::string& path, const OpticsConfig& optics,
                    const std::vector<double>& wavelengths_nm, double f_max, int n_points);

namespace detail {
/// Mirror-padding width for OTF filtering: 4 PSF radii, radius 3·1.22·λ·N.
int otf_pad_samples(double lambda_max_nm, double f_number, double pitch_mm);
}  // namespace detail

}  // namespace camsim
