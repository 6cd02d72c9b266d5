#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "camsim/metrics.hpp"

namespace camsim {

struct SpmSamplePoint {
    double y = 0, x = 0, ap = 0;
    int multiplicity = 1;  // curves merged into this lattice row
};

/// System Performance Map: AP on a lattice of (y = MTF50 or illuminance,
/// x = distance), plus a dense bilinear refinement whose axes contain every
/// lattice coordinate (so the dense grid matches the lattice exactly at
/// the nodes).
struct SpmGrid {
    std::string y_label = "mtf50_cyc_per_mm";
    std::vector<double> lattice_y, lattice_x;  // strictly increasing
    Plane<double> lattice;                     // lattice_y.size() rows
    bool log_y = false;
    std::vector<double> dense_y, dense_x;
    Plane<double> dense;
    std::vector<SpmSamplePoint> samples;

    /// Bilinear interpolation over the lattice (no extrapolation; clamps
    /// to the lattice hull).
    double value_at(double y, double x) const;
};

struct SpmOptions {
    std::string y_label = "mtf50_cyc_per_mm";
    int dense_ny = 96;
    int dense_nx = 128;
};

/// Assembles curves keyed by a per-camera y value (MTF50 or lux) into an
/// SPM lattice. Curves sharing a y value are averaged into one row. All
/// curves must be sampled at the same distances. The y axis switches to
/// log spacing when the values span at least two decades.
SpmGrid build_grid(const std::vector<std::pair<double, ApCurve>>& curves,
                   const SpmOptions& options = {});

struct ContourPolyline {
    double level = 0;
    bool closed = false;
    std::vector<std::pair<double, double>> points;  // (x, y) in axis units
};

/// Marching-squares iso-AP polylines on the dense grid. Levels outside the
/// data range yield no polylines.
std::vector<ContourPolyline> contours(const SpmGrid& grid, const std::vector<double>& levels);

/// Lattice CSV: header row of distances, first column of y values.
void emit_csv(const SpmGrid& grid, const std::string& path);
/// Parses a CSV produced by emit_csv (lattice only).
SpmGrid read_spm_csv(const std::string& path);

struct SvgOptions {
    int width_px = 720;
    int height_px = 480;
    std::optional<double> od50_marker_x;  // dashed distance marker
    std::optional<double> od50_marker_y;  // dashed y-axis marker
};

void emit_svg(const SpmGrid& grid, const std::vector<ContourPolyline>& iso,
              const std::string& path, const SvgOptions& options = {});

}  // namespace camsim
