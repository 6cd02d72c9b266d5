#include <cmath>

#include "doctest.h"

#include "camsim/optics.hpp"
#include "camsim/scene.hpp"

using namespace camsim;

namespace {

SpectralImage uniform_scene(int w, int h, double pitch_mm, float value) {
    SpectralImage img(w, h, 400, 10, 31, pitch_mm, RadiometricUnit::Radiance);
    for (auto& v : img.values) v = value;
    return img;
}

double band_mean(const SpectralImage& img, int b) {
    const float* p = img.band(b);
    double acc = 0;
    const size_t n = size_t(img.width) * img.height;
    for (size_t i = 0; i < n; ++i) acc += p[i];
    return acc / double(n);
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("diffraction_otf: endpoints and cutoff") {
    CHECK(diffraction_otf(0.0, 550, 2.4) == 1.0);
    const double fc = diffraction_cutoff(550, 2.4);
    CHECK(fc == doctest::Approx(757.576).epsilon(1e-4));
    CHECK(diffraction_otf(fc, 550, 2.4) == 0.0);
    CHECK(diffraction_otf(fc * 2, 550, 2.4) == 0.0);
    CHECK(diffraction_otf(fc * 0.5, 550, 2.4) ==
          doctest::Approx((2.0 / M_PI) * (std::acos(0.5) - 0.5 * std::sin(std::acos(0.5))))
              .epsilon(1e-12));
}

TEST_CASE("diffraction_otf: monotone non-increasing, in [0,1]") {
    for (double n : {1.8, 2.4, 4.0, 5.6}) {
        double prev = 1.1;
        for (double f = 0; f <= 1500; f += 2.5) {
            const double v = diffraction_otf(f, 500, n);
            CHECK(v <= prev + 1e-15);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            prev = v;
        }
    }
}

TEST_CASE("radiance_to_irradiance_scale: value, linearity, limit") {
    CHECK(radiance_to_irradiance_scale(2.4, 1.0) == doctest::Approx(0.13635).epsilon(1e-4));
    CHECK(radiance_to_irradiance_scale(2.4, 0.5) ==
          doctest::Approx(0.5 * radiance_to_irradiance_scale(2.4, 1.0)).epsilon(1e-15));
    CHECK(radiance_to_irradiance_scale(1e6, 1.0) < 1e-12);
}

TEST_CASE("apply_optics: zero scene stays zero; uniform scene scales by pi*T/4N^2") {
    OpticsConfig optics;
    optics.f_number = 2.4;

    SpectralImage zero = uniform_scene(32, 24, 0.0004, 0.0f);
    const OpticsResult z = apply_optics(zero, optics);
    for (float v : z.irradiance.values) CHECK(v == 0.0f);
    CHECK(z.irradiance.unit == RadiometricUnit::Irradiance);

    SpectralImage flat = uniform_scene(32, 24, 0.0004, 1.0f);
    const OpticsResult r = apply_optics(flat, optics);
    const double expected = radiance_to_irradiance_scale(2.4, 1.0);
    for (int b = 0; b < r.irradiance.n_wave; ++b)
        CHECK(band_mean(r.irradiance, b) == doctest::Approx(expected).epsilon(1e-7));
    CHECK(r.clamped_negative_samples == 0);
}

TEST_CASE("apply_optics: per-band mean preserved to 1e-9 (DC response is 1)") {
    OpticsConfig optics;
    optics.f_number = 4.0;
    RenderConfig cfg;
    cfg.edge_window_px = 16;
    const SpectralImage edge = generate_slanted_edge(cfg, 0.0028, 8);
    const OpticsResult r = apply_optics(edge, optics);
    const double scale = radiance_to_irradiance_scale(4.0, 1.0);
    for (int b = 0; b < edge.n_wave; b += 6) {
        const double in_mean = band_mean(edge, b) * scale;
        const double out_mean = band_mean(r.irradiance, b);
        CHECK(std::fabs(out_mean - in_mean) <= 1e-9 * in_mean);
    }
}

TEST_CASE("apply_optics: linear in the scene") {
    OpticsConfig optics;
    RenderConfig cfg;
    cfg.edge_window_px = 12;
    SpectralImage x = generate_slanted_edge(cfg, 0.0028, 8);
    SpectralImage y = uniform_scene(x.width, x.height, x.sample_pitch_mm, 0.3f);

    SpectralImage combo = x;
    for (size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = 2.0f * x.values[i] + 0.5f * y.values[i];

    const auto fx = apply_optics(x, optics);
    const auto fy = apply_optics(y, optics);
    const auto fc = apply_optics(combo, optics);
    for (size_t i = 0; i < fc.irradiance.values.size(); i += 97) {
        const double lin = 2.0 * fx.irradiance.values[i] + 0.5 * fy.irradiance.values[i];
        CHECK(fc.irradiance.values[i] == doctest::Approx(lin).epsilon(1e-5));
    }
}

TEST_CASE("apply_optics: blur spreads the edge more at higher f-number") {
    RenderConfig cfg;
    cfg.edge_window_px = 24;
    const SpectralImage edge = generate_slanted_edge(cfg, 0.0028, 8);

    auto edge_width = [&](double f_number) {
        OpticsConfig optics;
        optics.f_number = f_number;
        const SpectralImage out = apply_optics(edge, optics).irradiance;
        // 10-90% transition width along the center row of the middle band.
        const int row = out.height / 2;
        const float* p = out.band(out.n_wave / 2) + size_t(row) * out.width;
        float hi = p[0], lo = p[out.width - 1];
        int c10 = -1, c90 = -1;
        for (int c = 0; c < out.width; ++c) {
            if (c90 < 0 && p[c] < lo + 0.9 * (hi - lo)) c90 = c;
            if (c10 < 0 && p[c] < lo + 0.1 * (hi - lo)) c10 = c;
        }
        return c10 - c90;
    };
    CHECK(edge_width(8.0) > edge_width(2.0));
}

TEST_CASE("apply_optics: refuses undersampled grids") {
    OpticsConfig optics;
    optics.f_number = 1.8;  // cutoff at 400 nm: 1389 cycles/mm
    SpectralImage coarse = uniform_scene(16, 16, 0.0014, 1.0f);  // Nyquist 357
    CHECK_THROWS_AS(apply_optics(coarse, optics), data_error);
}

TEST_CASE("apply_optics: requires radiance input") {
    OpticsConfig optics;
    SpectralImage img = uniform_scene(8, 8, 0.0002, 1.0f);
    img.unit = RadiometricUnit::Irradiance;
    CHECK_THROWS_AS(apply_optics(img, optics), data_error);
}

TEST_CASE("optics config validation") {
    OpticsConfig bad;
    bad.f_number = -1;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.transmittance = 0.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.transmittance = 1.5;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

}  // TEST_SUITE
