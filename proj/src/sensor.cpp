#include "camsim/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace camsim {

namespace {
constexpr double kPlanck = 6.62607015e-34;
constexpr double kLightSpeed = 2.99792458e8;
}  // namespace

CfaPattern CfaPattern::from_string(const std::string& code) {
    if (code.size() != 4) throw config_error("cfa pattern must have 4 letters: " + code);
    CfaPattern p;
    for (size_t i = 0; i < 4; ++i) {
        switch (std::tolower(code[i])) {
            case 'r': p.cells[i] = CfaChannel::R; break;
            case 'g': p.cells[i] = CfaChannel::G; break;
            case 'b': p.cells[i] = CfaChannel::B; break;
            default: throw config_error("unknown cfa letter in: " + code);
        }
    }
    return p;
}

std::string CfaPattern::to_string() const {
    std::string out;
    for (auto c : cells) out += "rgb"[int(c)];
    return out;
}

double QeCurves::sample(CfaChannel c, double nm) const {
    switch (c) {
        case CfaChannel::R: return r.sample(nm);
        case CfaChannel::G: return g.sample(nm);
        case CfaChannel::B: return b.sample(nm);
    }
    return 0.0;
}

QeCurves default_qe_curves() {
    // Gaussian channel curves: peak 0.6 at 600/530/470 nm, sigma 50 nm.
    auto gaussian = [](double peak_nm) {
        Spd s;
        for (double nm = 380; nm <= 780; nm += 10) {
            s.wavelengths_nm.push_back(nm);
            const double d = (nm - peak_nm) / 50.0;
            s.power.push_back(0.6 * std::exp(-0.5 * d * d));
        }
        return s;
    };
    QeCurves qe;
    qe.r = gaussian(600.0);
    qe.g = gaussian(530.0);
    qe.b = gaussian(470.0);
    return qe;
}

QeCurves load_qe_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open qe csv: " + path);
    QeCurves qe;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {  // header: wavelength_nm,qe_r,qe_g,qe_b
            first = false;
            if (line.find("wavelength") != std::string::npos) continue;
        }
        std::istringstream row(line);
        double nm, r, g, b;
        char comma;
        if (!(row >> nm >> comma >> r >> comma >> g >> comma >> b))
            throw format_error("bad qe csv row: " + line);
        qe.r.wavelengths_nm.push_back(nm);
        qe.r.power.push_back(r);
        qe.g.wavelengths_nm.push_back(nm);
        qe.g.power.push_back(g);
        qe.b.wavelengths_nm.push_back(nm);
        qe.b.power.push_back(b);
    }
    if (qe.r.wavelengths_nm.size() < 2) throw format_error("qe csv has too few rows");
    return qe;
}

void SensorConfig::validate() const {
    if (!(pixel_um > 0.0)) throw config_error("sensor: pixel size must be positive");
    if (!(fill_factor > 0.0) || fill_factor > 1.0)
        throw config_error("sensor: fill factor must be in (0, 1]");
    if (well_capacity_e * conversion_gain_v_per_e > voltage_swing_v * (1.0 + 1e-12))
        throw config_error("sensor: well_capacity × conversion_gain exceeds voltage swing");
    if (read_noise_e < 0 || dark_current_e_per_s < 0)
        throw config_error("sensor: noise parameters must be nonnegative");
    if (bit_depth < 8 || bit_depth > 16) throw config_error("sensor: bit depth out of range");
    if (black_level_dn < 0 || black_level_dn >= max_dn())
        throw config_error("sensor: black level out of range");
    if (!(analog_gain > 0.0)) throw config_error("sensor: analog gain must be positive");
}

void ExposurePolicy::validate() const {
    if (!(target_fraction > 0.0) || target_fraction >= 1.0)
        throw config_error("exposure policy: target fraction must be in (0, 1)");
    if (!(max_exposure_s > 0.0)) throw config_error("exposure policy: max exposure must be positive");
    if (!(central_fraction > 0.0) || central_fraction > 1.0)
        throw config_error("exposure policy: central fraction must be in (0, 1]");
}

Plane<double> expected_electrons(const SpectralImage& irradiance, const SensorConfig& sensor,
                                 double t_s) {
    sensor.validate();
    if (!(t_s > 0.0)) throw data_error("expected_electrons: exposure must be positive");
    if (irradiance.unit != RadiometricUnit::Irradiance)
        throw data_error("expected_electrons expects sensor-plane irradiance");

    const double ratio = sensor.pixel_pitch_mm() / irradiance.sample_pitch_mm;
    const int k = int(std::lround(ratio));
    if (k < 1 || std::fabs(ratio - k) > 1e-6 * ratio)
        throw data_error("expected_electrons: irradiance pitch does not divide pixel pitch");
    if (irradiance.width % k != 0 || irradiance.height % k != 0)
        throw data_error("expected_electrons: grid is not a whole number of pixels");

    const int pw = irradiance.width / k;
    const int ph = irradiance.height / k;
    Plane<double> out(pw, ph, 0.0);

    const double area_m2 = (sensor.pixel_um * 1e-6) * (sensor.pixel_um * 1e-6);
    const double base = sensor.fill_factor * area_m2 * t_s * irradiance.wave_step_nm /
                        (double(k) * double(k));

    for (int b = 0; b < irradiance.n_wave; ++b) {
        const double lambda_nm = irradiance.wavelength(b);
        const double photons_per_joule = lambda_nm * 1e-9 / (kPlanck * kLightSpeed);
        const double w[3] = {
            base * photons_per_joule * sensor.qe.sample(CfaChannel::R, lambda_nm),
            base * photons_per_joule * sensor.qe.sample(CfaChannel::G, lambda_nm),
            base * photons_per_joule * sensor.qe.sample(CfaChannel::B, lambda_nm),
        };
        const float* plane = irradiance.band(b);
        for (int pr = 0; pr < ph; ++pr) {
            for (int pc = 0; pc < pw; ++pc) {
                double acc = 0.0;
                for (int sr = 0; sr < k; ++sr) {
                    const float* row = plane + size_t(pr * k + sr) * irradiance.width + pc * k;
                    for (int sc = 0; sc < k; ++sc) acc += row[sc];
                }
                out.at(pr, pc) += acc * w[int(sensor.cfa.at(pr, pc))];
            }
        }
    }
    return out;
}

double auto_exposure_from_rates(const Plane<double>& rate, const SensorConfig& sensor,
                                const ExposurePolicy& policy) {
    policy.validate();
    // Unclipped noise-free voltage peak over the central region at the probe
    // exposure; the mean dark current counts toward the expected voltage.
    const int rw = std::max(1, int(std::lround(rate.width() * policy.central_fraction)));
    const int rh = std::max(1, int(std::lround(rate.height() * policy.central_fraction)));
    const int c0 = (rate.width() - rw) / 2;
    const int r0 = (rate.height() - rh) / 2;

    double peak_rate = 0.0;
    for (int r = r0; r < r0 + rh; ++r)
        for (int c = c0; c < c0 + rw; ++c)
            peak_rate = std::max(peak_rate, rate.at(r, c));
    peak_rate += sensor.dark_current_e_per_s;

    const double volts_per_e = sensor.conversion_gain_v_per_e * sensor.analog_gain;
    const double peak_v_per_s = peak_rate * volts_per_e;
    if (!(peak_v_per_s > 0.0)) return policy.max_exposure_s;
    const double t = policy.target_fraction * sensor.voltage_swing_v / peak_v_per_s;
    return std::min(policy.max_exposure_s, t);
}

double auto_exposure(const SpectralImage& irradiance, const SensorConfig& sensor,
                     const ExposurePolicy& policy) {
    constexpr double kProbe = 1e-3;
    Plane<double> e = expected_electrons(irradiance, sensor, kProbe);
    for (auto& v : e.values()) v /= kProbe;  // electrons/s
    return auto_exposure_from_rates(e, sensor, policy);
}

RawImage capture_from_expected(const Plane<double>& expected_e, const SensorConfig& sensor,
                               double t_s, uint64_t seed, int workers,
                               Plane<double>* electrons_out) {
    sensor.validate();
    if (!(t_s > 0.0)) throw data_error("capture: exposure must be positive");

    RawImage raw;
    raw.width = expected_e.width();
    raw.height = expected_e.height();
    raw.dn.resize(expected_e.size());
    raw.cfa = sensor.cfa;
    raw.exposure_time_s = t_s;
    raw.bit_depth = sensor.bit_depth;
    raw.black_level_dn = sensor.black_level_dn;
    if (electrons_out) *electrons_out = Plane<double>(raw.width, raw.height, 0.0);

    const double dark_e = sensor.dark_current_e_per_s * t_s;
    const double volts_per_e = sensor.conversion_gain_v_per_e * sensor.analog_gain;
    const double read_noise_v = sensor.read_noise_e * volts_per_e;
    const double swing = sensor.voltage_swing_v;
    const int max_dn = sensor.max_dn();
    const double dn_span = double(max_dn - sensor.black_level_dn);
    std::vector<int64_t> saturated(raw.height, 0);

    parallel_for(raw.height, workers, [&](int64_t row) {
        Rng rng(derive_seed(seed, hash_str("capture-row"), uint64_t(row)));
        const double* means = expected_e.row(int(row));
        uint16_t* out = raw.dn.data() + size_t(row) * raw.width;
        for (int col = 0; col < raw.width; ++col) {
            double n_e = double(rng.poisson(means[col] + dark_e));
            bool sat = false;
            if (n_e >= sensor.well_capacity_e) {
                n_e = sensor.well_capacity_e;
                sat = true;
            }
            if (electrons_out) electrons_out->at(int(row), col) = n_e;
            double v = n_e * volts_per_e;
            if (read_noise_v > 0.0) v += read_noise_v * rng.gaussian();
            v = std::min(swing, v);
            const long dn = std::lround(sensor.black_level_dn + v / swing * dn_span);
            const int clamped = int(std::clamp<long>(dn, 0, max_dn));
            if (clamped == max_dn) sat = true;
            if (sat) ++saturated[row];
            out[col] = uint16_t(clamped);
        }
    });

    int64_t sat_total = 0;
    for (auto s : saturated) sat_total += s;
    raw.saturated_fraction = double(sat_total) / double(raw.dn.size());
    return raw;
}

RawImage capture(const SpectralImage& irradiance, const SensorConfig& sensor, double t_s,
                 uint64_t seed, int workers) {
    const Plane<double> e = expected_electrons(irradiance, sensor, t_s);
    return capture_from_expected(e, sensor, t_s, seed, workers);
}

RawImage capture_noise_free(const Plane<double>& expected_e, const SensorConfig& sensor,
                            double t_s) {
    sensor.validate();
    RawImage raw;
    raw.width = expected_e.width();
    raw.height = expected_e.height();
    raw.dn.resize(expected_e.size());
    raw.cfa = sensor.cfa;
    raw.exposure_time_s = t_s;
    raw.bit_depth = sensor.bit_depth;
    raw.black_level_dn = sensor.black_level_dn;

    const double dark_e = sensor.dark_current_e_per_s * t_s;
    const double volts_per_e = sensor.conversion_gain_v_per_e * sensor.analog_gain;
    const int max_dn = sensor.max_dn();
    const double dn_span = double(max_dn - sensor.black_level_dn);
    int64_t sat = 0;
    for (size_t i = 0; i < expected_e.size(); ++i) {
        double n_e = expected_e.data()[i] + dark_e;
        if (n_e >= sensor.well_capacity_e) {
            n_e = sensor.well_capacity_e;
            ++sat;
        }
        const double v = std::min(sensor.voltage_swing_v, n_e * volts_per_e);
        const long dn =
            std::lround(sensor.black_level_dn + v / sensor.voltage_swing_v * dn_span);
        const int clamped = int(std::clamp<long>(dn, 0, max_dn));
        if (clamped == max_dn) ++sat;
        raw.dn[i] = uint16_t(clamped);
    }
    raw.saturated_fraction = double(sat) / double(raw.dn.size());
    return raw;
}

void save_raw(const RawImage& raw, const std::string& path_base) {
    {
        std::ofstream out(path_base + ".pgm", std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot open for writing: " + path_base + ".pgm");
        out << "P5\n" << raw.width << " " << raw.height << "\n65535\n";
        // Little-endian sample order, per the sidecar contract.
        out.write(reinterpret_cast<const char*>(raw.dn.data()),
                  std::streamsize(raw.dn.size() * 2));
    }
    nlohmann::json j;
    j["exposure_time_s"] = raw.exposure_time_s;
    j["cfa"] = raw.cfa.to_string();
    j["bit_depth"] = raw.bit_depth;
    j["black_level"] = raw.black_level_dn;
    j["saturated_fraction"] = raw.saturated_fraction;
    std::ofstream sidecar(path_base + ".json", std::ios::binary | std::ios::trunc);
    if (!sidecar) throw data_error("cannot open for writing: " + path_base + ".json");
    sidecar << j.dump(2) << "\n";
}

RawImage load_raw(const std::string& path_base) {
    RawImage raw;
    {
        std::ifstream in(path_base + ".pgm", std::ios::binary);
        if (!in) throw data_error("cannot open: " + path_base + ".pgm");
        std::string magic;
        int maxval = 0;
        in >> magic >> raw.width >> raw.height >> maxval;
        if (magic != "P5" || maxval != 65535)
            throw format_error("unexpected pgm header in " + path_base + ".pgm");
        in.get();  // single whitespace after maxval
        raw.dn.resize(size_t(raw.width) * raw.height);
        in.read(reinterpret_cast<char*>(raw.dn.data()), std::streamsize(raw.dn.size() * 2));
        if (size_t(in.gcount()) != raw.dn.size() * 2)
            throw format_error("pgm payload truncated: " + path_base + ".pgm");
    }
    std::ifstream sidecar(path_base + ".json");
    if (!sidecar) throw data_error("cannot open: " + path_base + ".json");
    nlohmann::json j;
    sidecar >> j;
    raw.exposure_time_s = j.at("exposure_time_s").get<double>();
    raw.cfa = CfaPattern::from_string(j.at("cfa").get<std::string>());
    raw.bit_depth = j.at("bit_depth").get<int>();
    raw.black_level_dn = j.at("black_level").get<int>();
    raw.saturated_fraction = j.at("saturated_fraction").get<double>();
    return raw;
}

}  // namespace camsim
