#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "camsim/sensor.hpp"

using namespace camsim;

namespace {

SensorConfig test_sensor() {
    SensorConfig s;
    s.pixel_um = 1.4;
    s.fill_factor = 1.0;
    s.read_noise_e = 0.0;
    s.dark_current_e_per_s = 0.0;
    return s;
}

// Single-band "monochromatic" irradiance: band width Δλ carries E W/m²
// total, i.e. E/Δλ per nm.
SpectralImage mono_irradiance(int w, int h, double pitch_mm, double lambda_nm,
                              double watts_per_m2) {
    SpectralImage img(w, h, lambda_nm, 10.0, 1, pitch_mm, RadiometricUnit::Irradiance);
    for (auto& v : img.values) v = float(watts_per_m2 / 10.0);
    return img;
}

}  // namespace

TEST_SUITE("sensor") {

TEST_CASE("expected_electrons: zero input, photon-count scale, time linearity") {
    SensorConfig sensor = test_sensor();
    // QE exactly 1 everywhere for this check.
    sensor.qe.r = flat_spd(1.0, 380, 10, 41);
    sensor.qe.g = flat_spd(1.0, 380, 10, 41);
    sensor.qe.b = flat_spd(1.0, 380, 10, 41);

    const double pitch = sensor.pixel_pitch_mm() / 4.0;
    SpectralImage zero = mono_irradiance(8, 8, pitch, 550, 0.0);
    const Plane<double> none = expected_electrons(zero, sensor, 1e-3);
    for (size_t i = 0; i < none.size(); ++i) CHECK(none.data()[i] == 0.0);

    // 1 W/m² at 550 nm, 1.4 µm pixel, 1 ms: (1.96e-12 W · 1e-3 s) / 3.61e-19 J.
    SpectralImage one = mono_irradiance(8, 8, pitch, 550, 1.0);
    const Plane<double> e1 = expected_electrons(one, sensor, 1e-3);
    const double photon_energy = 6.62607015e-34 * 2.99792458e8 / 550e-9;
    const double expected = 1.96e-12 * 1e-3 / photon_energy;
    CHECK(expected == doctest::Approx(5.43e3).epsilon(0.01));
    CHECK(e1.at(3, 3) == doctest::Approx(expected).epsilon(1e-6));

    const Plane<double> e2 = expected_electrons(one, sensor, 2e-3);
    CHECK(e2.at(3, 3) == doctest::Approx(2.0 * e1.at(3, 3)).epsilon(1e-12));
}

TEST_CASE("expected_electrons: grid alignment is enforced") {
    const SensorConfig sensor = test_sensor();
    SpectralImage misaligned = mono_irradiance(8, 8, 0.0005, 550, 1.0);  // 2.8 ratio
    CHECK_THROWS_AS(expected_electrons(misaligned, sensor, 1e-3), data_error);
    SpectralImage ragged = mono_irradiance(9, 8, sensor.pixel_pitch_mm() / 4, 550, 1.0);
    CHECK_THROWS_AS(expected_electrons(ragged, sensor, 1e-3), data_error);
}

TEST_CASE("auto_exposure: linear rescale to 90% of swing") {
    SensorConfig sensor = test_sensor();
    ExposurePolicy policy;
    // Rate chosen so the probe peak voltage is 0.45 V at 1 ms.
    const double target_rate = 0.45 / sensor.conversion_gain_v_per_e / 1e-3;
    Plane<double> rate(9, 9, target_rate * 0.2);
    rate.at(4, 4) = target_rate;  // peak inside the central third
    const double t = auto_exposure_from_rates(rate, sensor, policy);
    CHECK(t == doctest::Approx(2.0e-3).epsilon(1e-9));
}

TEST_CASE("auto_exposure: clamps to 16 ms and handles dark scenes") {
    SensorConfig sensor = test_sensor();
    ExposurePolicy policy;
    // Would need 40 ms to reach 90%.
    const double rate = 0.9 * sensor.voltage_swing_v / sensor.conversion_gain_v_per_e / 40e-3;
    Plane<double> rates(6, 6, rate);
    CHECK(auto_exposure_from_rates(rates, sensor, policy) == policy.max_exposure_s);

    Plane<double> dark(6, 6, 0.0);
    CHECK(auto_exposure_from_rates(dark, sensor, policy) == policy.max_exposure_s);
}

TEST_CASE("auto_exposure: peak outside the central region is ignored") {
    SensorConfig sensor = test_sensor();
    ExposurePolicy policy;
    const double rate = 0.45 / sensor.conversion_gain_v_per_e / 1e-3;
    Plane<double> rates(9, 9, rate);
    rates.at(0, 0) = rate * 100.0;  // corner, outside central 3x3
    const double t = auto_exposure_from_rates(rates, sensor, policy);
    CHECK(t == doctest::Approx(2.0e-3).epsilon(1e-9));
}

TEST_CASE("capture: dark floor hits the black level exactly") {
    SensorConfig sensor = test_sensor();
    Plane<double> zero(16, 16, 0.0);
    const RawImage raw = capture_from_expected(zero, sensor, 1e-3, 5);
    for (uint16_t dn : raw.dn) CHECK(int(dn) == sensor.black_level_dn);
    CHECK(raw.saturated_fraction == 0.0);
}

TEST_CASE("capture_noise_free: exact quantization of the mean voltage") {
    SensorConfig sensor = test_sensor();
    Plane<double> mean(4, 4, 3000.0);
    const RawImage raw = capture_noise_free(mean, sensor, 1e-3);
    const double v = 3000.0 * sensor.conversion_gain_v_per_e;
    const int expected = int(std::lround(sensor.black_level_dn +
                                         v / sensor.voltage_swing_v *
                                             (sensor.max_dn() - sensor.black_level_dn)));
    for (uint16_t dn : raw.dn) CHECK(int(dn) == expected);
}

TEST_CASE("capture: Poisson sample mean is right over many trials") {
    SensorConfig sensor = test_sensor();
    const double mean_e = 1000.0;
    Plane<double> mean(100, 100, mean_e);  // 10^4 independent pixels
    Plane<double> electrons;
    capture_from_expected(mean, sensor, 1e-3, 99, 1, &electrons);
    double acc = 0.0;
    for (size_t i = 0; i < electrons.size(); ++i) acc += electrons.data()[i];
    const double sample_mean = acc / double(electrons.size());
    CHECK(std::fabs(sample_mean - mean_e) < 3.0 * std::sqrt(mean_e / 1e4));
}

TEST_CASE("capture: photon transfer (variance ~ mean) across regimes") {
    SensorConfig sensor = test_sensor();
    sensor.well_capacity_e = 1e7;  // keep clipping out of the statistics
    sensor.conversion_gain_v_per_e = sensor.voltage_swing_v / sensor.well_capacity_e;
    for (double mean_e : {15.0, 100.0, 2000.0, 2e4}) {
        Plane<double> mean(100, 100, mean_e);
        Plane<double> electrons;
        capture_from_expected(mean, sensor, 1e-3, 123, 1, &electrons);
        double m = 0, ss = 0;
        for (size_t i = 0; i < electrons.size(); ++i) m += electrons.data()[i];
        m /= double(electrons.size());
        for (size_t i = 0; i < electrons.size(); ++i) {
            const double d = electrons.data()[i] - m;
            ss += d * d;
        }
        const double var = ss / double(electrons.size() - 1);
        CHECK(var / m == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("capture: byte-deterministic across 1, 2, 8 workers") {
    SensorConfig sensor = test_sensor();
    sensor.read_noise_e = 1.5;
    sensor.dark_current_e_per_s = 0.1;
    Plane<double> mean(64, 48, 0.0);
    Rng rng(4);
    for (size_t i = 0; i < mean.size(); ++i) mean.data()[i] = rng.uniform() * 5000.0;

    const RawImage a = capture_from_expected(mean, sensor, 8e-3, 77, 1);
    const RawImage b = capture_from_expected(mean, sensor, 8e-3, 77, 2);
    const RawImage c = capture_from_expected(mean, sensor, 8e-3, 77, 8);
    CHECK(a.dn == b.dn);
    CHECK(a.dn == c.dn);

    const RawImage d = capture_from_expected(mean, sensor, 8e-3, 78, 1);
    CHECK(a.dn != d.dn);
}

TEST_CASE("capture: saturation accounting") {
    SensorConfig sensor = test_sensor();
    Plane<double> mean(8, 8, sensor.well_capacity_e * 10.0);
    const RawImage raw = capture_from_expected(mean, sensor, 1e-3, 3);
    CHECK(raw.saturated_fraction == 1.0);
    for (uint16_t dn : raw.dn) CHECK(int(dn) == sensor.max_dn());
}

TEST_CASE("capture: monotone in illumination when noise-free") {
    SensorConfig sensor = test_sensor();
    Plane<double> lo(4, 4, 500.0), hi(4, 4, 900.0);
    const RawImage a = capture_noise_free(lo, sensor, 1e-3);
    const RawImage b = capture_noise_free(hi, sensor, 1e-3);
    for (size_t i = 0; i < a.dn.size(); ++i) CHECK(b.dn[i] >= a.dn[i]);
}

TEST_CASE("raw pgm + sidecar round trip") {
    SensorConfig sensor = test_sensor();
    Plane<double> mean(6, 4, 800.0);
    const RawImage raw = capture_from_expected(mean, sensor, 2e-3, 11);
    const std::string base =
        (std::filesystem::temp_directory_path() / "camsim_raw_test").string();
    save_raw(raw, base);
    const RawImage back = load_raw(base);
    CHECK(back.dn == raw.dn);
    CHECK(back.exposure_time_s == raw.exposure_time_s);
    CHECK(back.cfa == raw.cfa);
    CHECK(back.bit_depth == raw.bit_depth);
    CHECK(back.black_level_dn == raw.black_level_dn);
    CHECK(back.saturated_fraction == raw.saturated_fraction);
}

TEST_CASE("sensor validation rejects inconsistent configs") {
    SensorConfig s = test_sensor();
    s.conversion_gain_v_per_e = 2.0 * s.voltage_swing_v / s.well_capacity_e;
    CHECK_THROWS_AS(s.validate(), config_error);
    s = test_sensor();
    s.fill_factor = 0.0;
    CHECK_THROWS_AS(s.validate(), config_error);
    s = test_sensor();
    s.black_level_dn = 4096;
    CHECK_THROWS_AS(s.validate(), config_error);
}

TEST_CASE("poisson sampler regimes are consistent") {
    // Mean and variance within 5 sigma of theory in each regime.
    for (double mean : {0.5, 5.0, 29.9, 30.1, 300.0, 9000.0, 2e4}) {
        Rng rng(uint64_t(mean * 1000));
        const int n = 20000;
        double acc = 0, ss = 0;
        for (int i = 0; i < n; ++i) {
            const double v = double(rng.poisson(mean));
            acc += v;
        }
        const double m = acc / n;
        Rng rng2(uint64_t(mean * 1000));
        for (int i = 0; i < n; ++i) {
            const double d = double(rng2.poisson(mean)) - m;
            ss += d * d;
        }
        const double sem = std::sqrt(mean / n);
        CHECK(std::fabs(m - mean) < 5.0 * sem);
        const double var = ss / (n - 1);
        // Var[S²] for Poisson ≈ (2λ² + λ)/n.
        const double var_sem = std::sqrt((2 * mean * mean + mean) / n);
        CHECK(std::fabs(var - mean) < 5.0 * var_sem);
    }
}

}  // TEST_SUITE
