#include <array>
#include <cmath>

#include "camsim/spectral.hpp"

namespace camsim {
namespace {

// CIE 1924 photopic luminous efficiency, 380-780 nm in 10 nm steps, with
// the 555 nm unit peak inserted so the interpolated maximum is exactly 1.
struct VlEntry {
    double nm;
    double v;
};
constexpr std::array<VlEntry, 42> kPhotopic = {{
    {380, 0.00004}, {390, 0.00012}, {400, 0.00040}, {410, 0.00121},
    {420, 0.00400}, {430, 0.01160}, {440, 0.02300}, {450, 0.03800},
    {460, 0.06000}, {470, 0.09098}, {480, 0.13902}, {490, 0.20802},
    {500, 0.32300}, {510, 0.50300}, {520, 0.71000}, {530, 0.86200},
    {540, 0.95400}, {550, 0.99495}, {555, 1.00000}, {560, 0.99500},
    {570, 0.95200}, {580, 0.87000}, {590, 0.75700}, {600, 0.63100},
    {610, 0.50300}, {620, 0.38100}, {630, 0.26500}, {640, 0.17500},
    {650, 0.10700}, {660, 0.06100}, {670, 0.03200}, {680, 0.01700},
    {690, 0.00821}, {700, 0.00410}, {710, 0.00209}, {720, 0.00105},
    {730, 0.00052}, {740, 0.00025}, {750, 0.00012}, {760, 0.00006},
    {770, 0.00003}, {780, 0.000015},
}};

// CIE standard illuminant D65 relative SPD, 380-780 nm in 10 nm steps,
// normalized to 100 at 560 nm.
constexpr std::array<double, 41> kD65 = {
    49.98, 54.65, 82.75, 91.49, 93.43, 86.68, 104.86, 117.01, 117.81, 114.86,
    115.92, 108.81, 109.35, 107.80, 104.79, 107.69, 104.41, 104.05, 100.00, 96.33,
    95.79, 88.69, 90.01, 89.60, 87.70, 83.29, 83.70, 80.03, 80.21, 82.28,
    78.28, 69.72, 71.61, 74.35, 61.60, 69.89, 75.09, 63.59, 46.42, 66.81,
    63.38,
};
constexpr double kD65Start = 380.0;
constexpr double kD65Step = 10.0;

}  // namespace

double photopic_v(double nm) {
    if (nm <= kPhotopic.front().nm || nm >= kPhotopic.back().nm) {
        if (nm == kPhotopic.front().nm) return kPhotopic.front().v;
        if (nm == kPhotopic.back().nm) return kPhotopic.back().v;
        return 0.0;
    }
    // Grid is small; linear scan keeps it simple.
    for (size_t i = 1; i < kPhotopic.size(); ++i) {
        if (nm <= kPhotopic[i].nm) {
            const auto& a = kPhotopic[i - 1];
            const auto& b = kPhotopic[i];
            const double t = (nm - a.nm) / (b.nm - a.nm);
            return a.v + t * (b.v - a.v);
        }
    }
    return 0.0;
}

Spd d65_spd(double start_nm, double step_nm, int n) {
    Spd out;
    out.wavelengths_nm.resize(n);
    out.power.resize(n);
    for (int i = 0; i < n; ++i) {
        const double nm = start_nm + i * step_nm;
        out.wavelengths_nm[i] = nm;
        double v = 0.0;
        const double pos = (nm - kD65Start) / kD65Step;
        if (pos >= 0.0 && pos <= double(kD65.size() - 1)) {
            const int i0 = int(std::floor(pos));
            const int i1 = std::min<int>(i0 + 1, int(kD65.size()) - 1);
            const double t = pos - i0;
            v = kD65[i0] + t * (kD65[i1] - kD65[i0]);
        }
        out.power[i] = v;
    }
    return out;
}

Spd blackbody_spd(double temperature_k, double start_nm, double step_nm, int n) {
    // Planck spectral radiance, normalized to 1 at the grid midpoint so the
    // result is a relative shape like the other illuminants.
    constexpr double h = 6.62607015e-34;
    constexpr double c = 2.99792458e8;
    constexpr double kb = 1.380649e-23;
    auto planck = [&](double nm) {
        const double lam = nm * 1e-9;
        return (2.0 * h * c * c / std::pow(lam, 5)) /
               (std::exp(h * c / (lam * kb * temperature_k)) - 1.0);
    };
    Spd out;
    out.wavelengths_nm.resize(n);
    out.power.resize(n);
    const double mid = planck(start_nm + 0.5 * step_nm * (n - 1));
    for (int i = 0; i < n; ++i) {
        const double nm = start_nm + i * step_nm;
        out.wavelengths_nm[i] = nm;
        out.power[i] = planck(nm) / mid;
    }
    return out;
}

Spd flat_spd(double value, double start_nm, double step_nm, int n) {
    Spd out;
    out.wavelengths_nm.resize(n);
    out.power.assign(n, value);
    for (int i = 0; i < n; ++i) out.wavelengths_nm[i] = start_nm + i * step_nm;
    return out;
}

}  // namespace camsim
