#include "camsim/render_fast.hpp"

#include <algorithm>
#include <cmath>

#include "fft2d.hpp"

namespace camsim {

namespace {

constexpr double kPlanck = 6.62607015e-34;
constexpr double kLightSpeed = 2.99792458e8;

// Channel weight per band: camera equation × QE × photon conversion ×
// pixel aperture × band width. Multiplying a band radiance by this gives
// that band's contribution to the pixel's e⁻/s.
std::array<std::vector<double>, 3> channel_weights(const SceneLayout& layout,
                                                   const OpticsConfig& optics,
                                                   const SensorConfig& sensor) {
    const double opt = radiance_to_irradiance_scale(optics.f_number, optics.transmittance);
    const double area = (sensor.pixel_um * 1e-6) * (sensor.pixel_um * 1e-6);
    const double base = opt * sensor.fill_factor * area * layout.wave_step_nm;
    std::array<std::vector<double>, 3> w;
    for (int c = 0; c < 3; ++c) w[c].resize(layout.n_wave);
    for (int b = 0; b < layout.n_wave; ++b) {
        const double nm = layout.wave_start_nm + b * layout.wave_step_nm;
        const double photons = nm * 1e-9 / (kPlanck * kLightSpeed);
        w[0][b] = base * photons * sensor.qe.sample(CfaChannel::R, nm);
        w[1][b] = base * photons * sensor.qe.sample(CfaChannel::G, nm);
        w[2][b] = base * photons * sensor.qe.sample(CfaChannel::B, nm);
    }
    return w;
}

// Radial kernel LUT: G(f) = Σ_b weight_c[b]·spd[b]·OTF(f, λ_b).
struct RadialLut {
    std::vector<double> values;
    double step = 1.0;
    double at(double f) const {
        const double pos = f / step;
        const size_t i = std::min(size_t(pos), values.size() - 2);
        const double t = pos - double(i);
        return values[i] + t * (values[i + 1] - values[i]);
    }
};

RadialLut build_lut(const SceneLayout& layout, const std::vector<double>& weights,
                    const std::vector<double>& spd, double f_number, double f_max) {
    constexpr int kSize = 8192;
    RadialLut lut;
    lut.values.assign(kSize + 1, 0.0);
    lut.step = f_max / kSize;
    for (int b = 0; b < layout.n_wave; ++b) {
        const double coeff = weights[b] * spd[b];
        if (coeff == 0.0) continue;
        const double nm = layout.wave_start_nm + b * layout.wave_step_nm;
        for (int i = 0; i <= kSize; ++i)
            lut.values[i] += coeff * diffraction_otf(i * lut.step, nm, f_number);
    }
    return lut;
}

std::vector<double> delta_spd(const Spd& a, const Spd& b) {
    std::vector<double> out(a.power.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.power[i] - b.power[i];
    return out;
}

}  // namespace

int adaptive_supersample(double pixel_um, double f_number, double wave_start_nm,
                         int floor_factor) {
    const double pitch_req_um = wave_start_nm * 1e-3 * f_number / 2.0;
    const int k = int(std::ceil(pixel_um / pitch_req_um - 1e-12));
    return std::max(floor_factor, k);
}

FastRenderResult render_scene_electron_rates(const SceneLayout& layout,
                                             const OpticsConfig& optics,
                                             const SensorConfig& sensor, int supersample) {
    optics.validate();
    sensor.validate();
    const double pixel_pitch = sensor.pixel_pitch_mm();
    const double pitch = pixel_pitch / supersample;
    if (1.0 / (2.0 * pitch) < diffraction_cutoff(layout.wave_start_nm, optics.f_number))
        throw data_error("render_scene_electron_rates: undersampled grid");

    const int px_w = std::max<int>(1, int(std::ceil(layout.window_w / pixel_pitch - 1e-9)));
    const int px_h = std::max<int>(1, int(std::ceil(layout.window_h / pixel_pitch - 1e-9)));
    const int width = px_w * supersample;
    const int height = px_h * supersample;

    const Plane<uint8_t> map = scene_index_map(layout, pitch, width, height, true);
    const double ambient_scale = scene_ambient_scale(layout, map);
    const bool emissive = !layout.emissive_rects.empty();

    Spd sky = layout.sky, road = layout.road, car = layout.car;
    for (auto& v : sky.power) v *= ambient_scale;
    for (auto& v : road.power) v *= ambient_scale;
    for (auto& v : car.power) v *= ambient_scale;

    const auto weights = channel_weights(layout, optics, sensor);

    // Everything is road plus per-mask deltas; the road base term needs no
    // filtering because OTF(0) = 1 preserves constants.
    struct MaskJob {
        uint8_t id;
        std::vector<double> spd_full;     // contribution to the full render
        std::vector<double> spd_ambient;  // contribution to the ambient render
    };
    std::vector<MaskJob> jobs;
    jobs.push_back({kLayerSky, delta_spd(sky, road), delta_spd(sky, road)});
    jobs.push_back({kLayerCar, delta_spd(car, road), delta_spd(car, road)});
    if (emissive) {
        MaskJob job;
        job.id = kLayerEmissive;
        job.spd_full = layout.emissive.power;
        for (size_t i = 0; i < job.spd_full.size(); ++i) job.spd_full[i] -= road.power[i];
        job.spd_ambient = delta_spd(car, road);  // body paint under the lamps
        jobs.push_back(std::move(job));
    }

    const double lambda_max = layout.wave_start_nm + (layout.n_wave - 1) * layout.wave_step_nm;
    const int pad = detail::otf_pad_samples(lambda_max, optics.f_number, pitch);
    const int fh = detail::next_fast_size(height + 2 * pad);
    const int fw = detail::next_fast_size(width + 2 * pad);
    const int off_y = (fh - height) / 2;
    const int off_x = (fw - width) / 2;

    detail::Fft2D fft(fh, fw);
    const int wc = fft.freq_width();
    const double dfx = 1.0 / (fw * pitch);
    const double dfy = 1.0 / (fh * pitch);
    const double f_max = std::hypot(0.5 / pitch, 0.5 / pitch);

    auto make_rates = [&]() {
        ChannelRates rates;
        rates.r = Plane<double>(px_w, px_h, 0.0);
        rates.g = Plane<double>(px_w, px_h, 0.0);
        rates.b = Plane<double>(px_w, px_h, 0.0);
        return rates;
    };
    FastRenderResult result;
    result.full = make_rates();
    if (emissive) result.ambient = make_rates();

    // Road base rates (constant over the window).
    for (int c = 0; c < 3; ++c) {
        double base = 0.0;
        for (int b = 0; b < layout.n_wave; ++b) base += weights[c][b] * road.power[b];
        Plane<double>& full = c == 0 ? result.full.r : c == 1 ? result.full.g : result.full.b;
        for (auto& v : full.values()) v = base;
        if (emissive) {
            Plane<double>& amb =
                c == 0 ? result.ambient->r : c == 1 ? result.ambient->g : result.ambient->b;
            for (auto& v : amb.values()) v = base;
        }
    }

    std::vector<std::complex<double>> mask_freq(size_t(fh) * wc);
    const double inv_ss = 1.0 / (double(supersample) * double(supersample));

    for (const auto& job : jobs) {
        // Mirror-padded binary mask → spectrum (computed once per mask).
        double* real = fft.real();
        for (int r = 0; r < fh; ++r) {
            const int sr = detail::mirror_index(r - off_y, height);
            const uint8_t* srow = map.row(sr);
            double* drow = real + size_t(r) * fw;
            for (int c = 0; c < fw; ++c)
                drow[c] = srow[detail::mirror_index(c - off_x, width)] == job.id ? 1.0 : 0.0;
        }
        fft.forward();
        std::copy(fft.freq(), fft.freq() + mask_freq.size(), mask_freq.begin());

        const int n_variants = emissive ? 2 : 1;
        for (int variant = 0; variant < n_variants; ++variant) {
            const auto& spd = variant == 0 ? job.spd_full : job.spd_ambient;
            for (int c = 0; c < 3; ++c) {
                const RadialLut lut = build_lut(layout, weights[c], spd, optics.f_number, f_max);
                auto* freq = fft.freq();
                for (int iy = 0; iy < fh; ++iy) {
                    const double fy = (iy <= fh / 2 ? iy : iy - fh) * dfy;
                    const std::complex<double>* src = mask_freq.data() + size_t(iy) * wc;
                    std::complex<double>* dst = freq + size_t(iy) * wc;
                    for (int ix = 0; ix < wc; ++ix)
                        dst[ix] = src[ix] * lut.at(std::hypot(ix * dfx, fy));
                }
                fft.inverse();
                const double norm = fft.norm() * inv_ss;
                Plane<double>& plane =
                    variant == 0
                        ? (c == 0 ? result.full.r : c == 1 ? result.full.g : result.full.b)
                        : (c == 0 ? result.ambient->r
                                  : c == 1 ? result.ambient->g : result.ambient->b);
                // Box-reduce the filtered supersampled plane straight into
                // the pixel accumulator.
                for (int pr = 0; pr < px_h; ++pr) {
                    for (int sr = 0; sr < supersample; ++sr) {
                        const double* row =
                            fft.real() + size_t(pr * supersample + sr + off_y) * fw + off_x;
                        double* out = plane.row(pr);
                        for (int pc = 0; pc < px_w; ++pc) {
                            double acc = 0.0;
                            const double* cell = row + size_t(pc) * supersample;
                            for (int sc = 0; sc < supersample; ++sc) acc += cell[sc];
                            out[pc] += acc * norm;
                        }
                    }
                }
            }
        }
    }

    auto clamp_rates = [](ChannelRates& rates) {
        for (Plane<double>* p : {&rates.r, &rates.g, &rates.b})
            for (auto& v : p->values()) v = std::max(0.0, v);
    };
    clamp_rates(result.full);
    if (result.ambient) clamp_rates(*result.ambient);
    return result;
}

}  // namespace camsim
