#include "camsim/mtf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "camsim/isp.hpp"

namespace camsim {

namespace {

// Least-squares line col = a*row + b.
void fit_line(const std::vector<double>& rows, const std::vector<double>& cols, double& a,
              double& b) {
    const size_t n = rows.size();
    double sr = 0, sc = 0, srr = 0, src = 0;
    for (size_t i = 0; i < n; ++i) {
        sr += rows[i];
        sc += cols[i];
        srr += rows[i] * rows[i];
        src += rows[i] * cols[i];
    }
    const double det = n * srr - sr * sr;
    if (std::fabs(det) < 1e-12) throw data_error("slanted edge: degenerate row span");
    a = (n * src - sr * sc) / det;
    b = (srr * sc - sr * src) / det;
}

double hamming(double x, double n) {
    // Window over [0, n), centered at (n-1)/2 unless shifted by the caller.
    return 0.54 - 0.46 * std::cos(2.0 * M_PI * x / (n - 1.0));
}

}  // namespace

MtfResult slanted_edge_mtf(const std::vector<EdgeSample>& samples, int width, int height,
                           double pixel_pitch_mm, int oversample) {
    if (samples.size() < 64) throw data_error("slanted edge: too few samples");

    // Per-row edge location from the centroid of the derivative.
    std::map<int, std::vector<const EdgeSample*>> rows;
    for (const auto& s : samples) rows[int(std::lround(s.row))].push_back(&s);

    auto row_centroid = [](std::vector<const EdgeSample*>& row,
                           double window_center) -> double {
        std::sort(row.begin(), row.end(),
                  [](const EdgeSample* a, const EdgeSample* b) { return a->col < b->col; });
        double num = 0, den = 0;
        const double span = row.back()->col - row.front()->col;
        for (size_t i = 1; i + 1 < row.size(); ++i) {
            const double d = (row[i + 1]->value - row[i - 1]->value) /
                             (row[i + 1]->col - row[i - 1]->col);
            double w = 1.0;
            if (window_center >= 0.0 && span > 1.0)
                w = hamming(row[i]->col - window_center + (span / 2.0), span);
            num += std::fabs(d) * w * row[i]->col;
            den += std::fabs(d) * w;
        }
        return den > 0.0 ? num / den : -1.0;
    };

    std::vector<double> fit_rows, fit_cols;
    for (auto& [r, row] : rows) {
        if (row.size() < 8) continue;
        const double c = row_centroid(row, -1.0);
        if (c >= 0.0) {
            fit_rows.push_back(r + 0.5);
            fit_cols.push_back(c);
        }
    }
    if (fit_rows.size() < 8) throw data_error("slanted edge: edge not found");
    double a, b;
    fit_line(fit_rows, fit_cols, a, b);

    // Refinement pass with a Hamming window centered on the fitted edge.
    fit_rows.clear();
    fit_cols.clear();
    for (auto& [r, row] : rows) {
        if (row.size() < 8) continue;
        const double c = row_centroid(row, a * (r + 0.5) + b);
        if (c >= 0.0) {
            fit_rows.push_back(r + 0.5);
            fit_cols.push_back(c);
        }
    }
    fit_line(fit_rows, fit_cols, a, b);

    const double theta = std::atan(a);
    const double cos_theta = std::cos(theta);

    // Project samples onto the edge normal into an oversampled ESF.
    const int n_bins = width * oversample;
    std::vector<double> esf_sum(n_bins, 0.0);
    std::vector<int64_t> esf_cnt(n_bins, 0);
    for (const auto& s : samples) {
        const double d = (s.col - (a * s.row + b)) * cos_theta;
        const int bin = int(std::floor(d * oversample)) + n_bins / 2;
        if (bin >= 0 && bin < n_bins) {
            esf_sum[bin] += s.value;
            ++esf_cnt[bin];
        }
    }
    std::vector<double> esf(n_bins, 0.0);
    int first = -1, last = -1;
    for (int i = 0; i < n_bins; ++i) {
        if (esf_cnt[i] > 0) {
            esf[i] = esf_sum[i] / double(esf_cnt[i]);
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0 || last - first < 16) throw data_error("slanted edge: empty esf");
    for (int i = 0; i < n_bins; ++i) {  // fill gaps and tails
        if (esf_cnt[i] == 0) {
            if (i < first) esf[i] = esf[first];
            else if (i > last) esf[i] = esf[last];
            else {
                int lo = i - 1, hi = i + 1;
                while (esf_cnt[hi] == 0) ++hi;
                esf[i] = 0.5 * (esf[lo] + esf[hi]);
            }
        }
    }

    // LSF, centered Hamming window, DFT.
    std::vector<double> lsf(n_bins, 0.0);
    for (int i = 1; i + 1 < n_bins; ++i) lsf[i] = 0.5 * (esf[i + 1] - esf[i - 1]);
    double cnum = 0, cden = 0;
    for (int i = 0; i < n_bins; ++i) {
        cnum += std::fabs(lsf[i]) * i;
        cden += std::fabs(lsf[i]);
    }
    const double center = cden > 0.0 ? cnum / cden : n_bins / 2.0;
    for (int i = 0; i < n_bins; ++i) {
        const double x = i - center + (n_bins - 1) / 2.0;
        lsf[i] *= (x >= 0 && x <= n_bins - 1) ? hamming(x, double(n_bins)) : 0.0;
    }

    const int n_half = n_bins / 2;
    std::vector<double> mtf(n_half, 0.0);
    for (int k = 0; k < n_half; ++k) {
        double re = 0, im = 0;
        for (int i = 0; i < n_bins; ++i) {
            const double ph = 2.0 * M_PI * k * i / double(n_bins);
            re += lsf[i] * std::cos(ph);
            im -= lsf[i] * std::sin(ph);
        }
        mtf[k] = std::hypot(re, im);
        if (k > 0) {
            // Undo the 3-tap derivative's sin rolloff.
            const double x = 2.0 * M_PI * k / double(n_bins);
            mtf[k] *= std::min(10.0, x / std::sin(x));
        }
    }
    if (!(mtf[0] > 0.0)) throw data_error("slanted edge: zero DC response");
    for (int k = n_half - 1; k >= 0; --k) mtf[k] /= mtf[0];

    // Bin spacing along the normal is cosθ/oversample pixels.
    const double delta_px = cos_theta / double(oversample);
    const double bin_to_cyc_mm = 1.0 / (double(n_bins) * delta_px * pixel_pitch_mm);

    MtfResult out;
    out.edge_angle_deg = std::fabs(theta) * 180.0 / M_PI;
    out.curve.reserve(n_half);
    for (int k = 0; k < n_half; ++k) out.curve.push_back({k * bin_to_cyc_mm, mtf[k]});

    const double nyquist_cyc_mm = 1.0 / (2.0 * pixel_pitch_mm);
    int cross = -1;
    for (int k = 1; k < n_half; ++k) {
        if (mtf[k] <= 0.5) {
            cross = k;
            break;
        }
    }
    if (cross > 0) {
        const double m0 = mtf[cross - 1], m1 = mtf[cross];
        const double frac = (m0 - 0.5) / (m0 - m1);
        out.mtf50_cyc_per_mm = (cross - 1 + frac) * bin_to_cyc_mm;
        out.extrapolated = out.mtf50_cyc_per_mm > nyquist_cyc_mm;
    } else {
        // No crossing in the measured range: extend the last segment.
        const double m0 = mtf[n_half - 2], m1 = mtf[n_half - 1];
        const double slope = (m1 - m0) / bin_to_cyc_mm;
        out.mtf50_cyc_per_mm =
            slope < 0.0 ? (n_half - 1) * bin_to_cyc_mm + (0.5 - m1) / slope
                        : nyquist_cyc_mm;
        out.extrapolated = true;
    }
    return out;
}

MtfResult measure_mtf50(const CameraConfig& camera, const RenderConfig& scene_cfg,
                        const MtfOptions& options) {
    camera.validate();
    RenderConfig cfg = scene_cfg;
    cfg.edge_window_px = options.window_px;

    const SpectralImage edge =
        generate_slanted_edge(cfg, camera.sensor.pixel_pitch_mm(), cfg.supersample);
    const OpticsResult optics = apply_optics(edge, camera.optics);

    // Electron rates, then a fixed exposure placing the bright side at the
    // requested fraction of swing. Noise stays off: MTF is deterministic.
    Plane<double> rate = expected_electrons(optics.irradiance, camera.sensor, 1.0);
    double peak = 0.0;
    for (size_t i = 0; i < rate.size(); ++i) peak = std::max(peak, rate.data()[i]);
    if (!(peak > 0.0)) throw data_error("measure_mtf50: dark edge render");
    const double volts_per_e =
        camera.sensor.conversion_gain_v_per_e * camera.sensor.analog_gain;
    const double t = options.exposure_fraction * camera.sensor.voltage_swing_v /
                     (peak * volts_per_e);
    Plane<double> expected = rate;
    for (auto& v : expected.values()) v *= t;
    const RawImage raw = capture_noise_free(expected, camera.sensor, t);

    // Central region only; demosaic borders replicate and would bias the fit.
    const int margin = 4;
    std::vector<EdgeSample> edge_samples;
    const int w = raw.width, h = raw.height;
    if (options.channel == MtfChannel::GreenRaw) {
        const double span = double((1 << raw.bit_depth) - 1 - raw.black_level_dn);
        for (int r = margin; r < h - margin; ++r) {
            for (int c = margin; c < w - margin; ++c) {
                if (raw.cfa.at(r, c) != CfaChannel::G) continue;
                const double v = std::max(0.0, (double(raw.at(r, c)) - raw.black_level_dn) / span);
                edge_samples.push_back({v, double(r - margin), double(c - margin)});
            }
        }
    } else {
        const LinearRgb rgb = demosaic(raw);
        for (int r = margin; r < h - margin; ++r) {
            for (int c = margin; c < w - margin; ++c) {
                const double v =
                    options.channel == MtfChannel::Luma
                        ? 0.299 * rgb.r.at(r, c) + 0.587 * rgb.g.at(r, c) + 0.114 * rgb.b.at(r, c)
                        : rgb.g.at(r, c);
                edge_samples.push_back({v, double(r - margin), double(c - margin)});
            }
        }
    }
    return slanted_edge_mtf(edge_samples, w - 2 * margin, h - 2 * margin,
                            camera.sensor.pixel_pitch_mm(), options.oversample);
}

double analytic_mtf50(const OpticsConfig& optics, double pixel_um, double lambda_nm) {
    const double p_mm = pixel_um * 1e-3;
    auto system_mtf = [&](double f) {
        const double x = M_PI * f * p_mm;
        const double pixel = x == 0.0 ? 1.0 : std::fabs(std::sin(x) / x);
        return diffraction_otf(f, lambda_nm, optics.f_number) * pixel;
    };
    double lo = 0.0, hi = diffraction_cutoff(lambda_nm, optics.f_number);
    if (system_mtf(hi) > 0.5) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (system_mtf(mid) > 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void save_mtf_csv(const MtfResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "frequency_cyc_per_mm,modulation\n";
    char buf[96];
    for (const auto& [f, m] : result.curve) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", f, m);
        out << buf;
    }
}

}  // namespace camsim
