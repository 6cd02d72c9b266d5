#include "camsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fft2d.hpp"

namespace camsim {

void OpticsConfig::validate() const {
    if (!(f_number > 0.0)) throw config_error("optics: f_number must be positive");
    if (!(focal_length_mm > 0.0)) throw config_error("optics: focal length must be positive");
    if (!(transmittance > 0.0) || transmittance > 1.0)
        throw config_error("optics: transmittance must be in (0, 1]");
}

double diffraction_cutoff(double lambda_nm, double f_number) {
    return 1.0 / (lambda_nm * 1e-6 * f_number);  // λ in mm
}

double diffraction_otf(double f_cyc_per_mm, double lambda_nm, double f_number) {
    if (f_cyc_per_mm <= 0.0) return 1.0;
    const double fc = diffraction_cutoff(lambda_nm, f_number);
    if (f_cyc_per_mm >= fc) return 0.0;
    const double phi = std::acos(f_cyc_per_mm / fc);
    return (2.0 / M_PI) * (phi - std::cos(phi) * std::sin(phi));
}

double radiance_to_irradiance_scale(double f_number, double transmittance) {
    return M_PI * transmittance / (4.0 * f_number * f_number);
}

namespace detail {

int otf_pad_samples(double lambda_max_nm, double f_number, double pitch_mm) {
    // 4 PSF radii, PSF radius taken as 3·1.22·λ·N.
    const double psf_radius_mm = 3.0 * 1.22 * lambda_max_nm * 1e-6 * f_number;
    return std::max(8, int(std::ceil(4.0 * psf_radius_mm / pitch_mm)));
}

}  // namespace detail

OpticsResult apply_optics(const SpectralImage& scene, const OpticsConfig& optics) {
    optics.validate();
    if (scene.unit != RadiometricUnit::Radiance)
        throw data_error("apply_optics expects a radiance-tagged scene");

    const double pitch = scene.sample_pitch_mm;
    const double nyquist = 1.0 / (2.0 * pitch);
    const double fc_max = diffraction_cutoff(scene.wave_start_nm, optics.f_number);
    if (nyquist < fc_max) {
        throw data_error("apply_optics: grid Nyquist " + std::to_string(nyquist) +
                         " cycles/mm is below the diffraction cutoff " +
                         std::to_string(fc_max) + " of the shortest band (undersampled)");
    }

    const double lambda_max = scene.wavelength(scene.n_wave - 1);
    const int pad = detail::otf_pad_samples(lambda_max, optics.f_number, pitch);
    const int fh = detail::next_fast_size(scene.height + 2 * pad);
    const int fw = detail::next_fast_size(scene.width + 2 * pad);
    const int off_y = (fh - scene.height) / 2;
    const int off_x = (fw - scene.width) / 2;

    const double scale = radiance_to_irradiance_scale(optics.f_number, optics.transmittance);

    OpticsResult result;
    result.irradiance = SpectralImage(scene.width, scene.height, scene.wave_start_nm,
                                      scene.wave_step_nm, scene.n_wave, pitch,
                                      RadiometricUnit::Irradiance);

    detail::Fft2D fft(fh, fw);
    const int wc = fft.freq_width();
    const double dfx = 1.0 / (fw * pitch);
    const double dfy = 1.0 / (fh * pitch);

    // Radial OTF lookup rebuilt per band; linear interpolation on a grid
    // fine enough that the error is far below the float32 payload noise.
    constexpr int kLutSize = 8192;
    std::vector<double> lut(kLutSize + 1);
    const double f_max = std::hypot(0.5 / pitch, 0.5 / pitch);
    const double lut_step = f_max / kLutSize;

    std::vector<double> cos4;
    if (optics.relative_illumination) {
        cos4.resize(size_t(scene.height) * scene.width);
        const double cx = scene.width / 2.0, cy = scene.height / 2.0;
        const double f2 = optics.focal_length_mm * optics.focal_length_mm;
        for (int r = 0; r < scene.height; ++r) {
            for (int c = 0; c < scene.width; ++c) {
                const double rx = (c + 0.5 - cx) * pitch;
                const double ry = (r + 0.5 - cy) * pitch;
                const double cos2 = f2 / (f2 + rx * rx + ry * ry);
                cos4[size_t(r) * scene.width + c] = cos2 * cos2;
            }
        }
    }

    for (int b = 0; b < scene.n_wave; ++b) {
        const double lambda = scene.wavelength(b);
        for (int i = 0; i <= kLutSize; ++i)
            lut[i] = diffraction_otf(i * lut_step, lambda, optics.f_number);

        // Mirror-pad the band into the FFT buffer.
        const float* src = scene.band(b);
        double* real = fft.real();
        for (int r = 0; r < fh; ++r) {
            const int sr = detail::mirror_index(r - off_y, scene.height);
            const float* srow = src + size_t(sr) * scene.width;
            double* drow = real + size_t(r) * fw;
            for (int c = 0; c < fw; ++c)
                drow[c] = srow[detail::mirror_index(c - off_x, scene.width)];
        }

        fft.forward();
        auto* freq = fft.freq();
        for (int iy = 0; iy < fh; ++iy) {
            const double fy = (iy <= fh / 2 ? iy : iy - fh) * dfy;
            std::complex<double>* row = freq + size_t(iy) * wc;
            for (int ix = 0; ix < wc; ++ix) {
                const double f = std::hypot(ix * dfx, fy);
                const double pos = f / lut_step;
                const int i0 = std::min(int(pos), kLutSize - 1);
                const double t = pos - i0;
                row[ix] *= scale * (lut[i0] + t * (lut[i0 + 1] - lut[i0]));
            }
        }
        fft.inverse();

        const double norm = fft.norm();
        float* dst = result.irradiance.band(b);
        float band_max = 0.0f;
        for (int r = 0; r < scene.height; ++r) {
            const double* srow = fft.real() + size_t(r + off_y) * fw + off_x;
            float* drow = dst + size_t(r) * scene.width;
            for (int c = 0; c < scene.width; ++c) {
                const float v = float(srow[c] * norm);
                drow[c] = v;
                band_max = std::max(band_max, v);
            }
        }
        if (optics.relative_illumination) {
            for (size_t i = 0; i < cos4.size(); ++i)
                dst[i] = float(dst[i] * cos4[i]);
        }
        // Physical irradiance is nonnegative; clamp numerical ringing and
        // report anything beyond the documented bound.
        const float bound = -1e-9f * band_max;
        const size_t plane = size_t(scene.height) * scene.width;
        for (size_t i = 0; i < plane; ++i) {
            if (dst[i] < 0.0f) {
                if (dst[i] < bound) ++result.clamped_negative_samples;
                dst[i] = 0.0f;
            }
        }
    }
    return result;
}

void export_otf_csv(const std::string& path, const OpticsConfig& optics,
                    const std::vector<double>& wavelengths_nm, double f_max, int n_points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "frequency_cyc_per_mm";
    for (double nm : wavelengths_nm) out << ",otf_" << nm << "nm";
    out << "\n";
    char buf[64];
    for (int i = 0; i < n_points; ++i) {
        const double f = f_max * i / (n_points - 1);
        std::snprintf(buf, sizeof(buf), "%.17g", f);
        out << buf;
        for (double nm : wavelengths_nm) {
            std::snprintf(buf, sizeof(buf), "%.17g", diffraction_otf(f, nm, optics.f_number));
            out << ',' << buf;
        }
        out << "\n";
    }
}

}  // namespace camsim
