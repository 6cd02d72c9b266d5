#include "camsim/spm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace camsim {

namespace {

// Index of the cell containing v: largest i with axis[i] <= v, clamped to
// a valid cell. Exact hits on axis nodes give a zero fraction.
size_t cell_index(const std::vector<double>& axis, double v, double& frac) {
    size_t i = std::upper_bound(axis.begin(), axis.end(), v) - axis.begin();
    if (i > 0) --i;
    if (i >= axis.size() - 1) i = axis.size() - 2;
    const double span = axis[i + 1] - axis[i];
    frac = span > 0.0 ? (v - axis[i]) / span : 0.0;
    frac = std::clamp(frac, 0.0, 1.0);
    return i;
}

std::vector<double> dense_axis(const std::vector<double>& lattice, int n, bool log_spaced) {
    std::vector<double> out;
    const double lo = lattice.front(), hi = lattice.back();
    for (int i = 0; i < n; ++i) {
        const double t = double(i) / double(n - 1);
        out.push_back(log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                                 : lo + t * (hi - lo));
    }
    out.insert(out.end(), lattice.begin(), lattice.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    // Guard the ends against log-domain rounding.
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace

double SpmGrid::value_at(double y, double x) const {
    double fy, fx;
    const size_t iy = cell_index(lattice_y, y, fy);
    const size_t ix = cell_index(lattice_x, x, fx);
    const double v00 = lattice.at(int(iy), int(ix));
    const double v01 = lattice.at(int(iy), int(ix + 1));
    const double v10 = lattice.at(int(iy + 1), int(ix));
    const double v11 = lattice.at(int(iy + 1), int(ix + 1));
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

SpmGrid build_grid(const std::vector<std::pair<double, ApCurve>>& curves,
                   const SpmOptions& options) {
    if (curves.size() < 2) throw data_error("build_grid: need at least 2 curves");

    // Shared distance axis.
    std::vector<double> xs;
    for (const auto& p : curves.front().second.points) xs.push_back(p.distance_m);
    if (xs.size() < 2) throw data_error("build_grid: degenerate grid (single column)");
    for (const auto& [y, curve] : curves) {
        if (curve.points.size() != xs.size())
            throw data_error("build_grid: curves sampled at different distances");
        for (size_t i = 0; i < xs.size(); ++i)
            if (curve.points[i].distance_m != xs[i])
                throw data_error("build_grid: curves sampled at different distances");
    }

    // Rows keyed by y; equal y values average into one row.
    std::map<double, std::vector<const ApCurve*>> rows;
    for (const auto& [y, curve] : curves) rows[y].push_back(&curve);
    if (rows.size() < 2) throw data_error("build_grid: degenerate grid (single row)");

    SpmGrid grid;
    grid.y_label = options.y_label;
    grid.lattice_x = xs;
    grid.lattice = Plane<double>(int(xs.size()), int(rows.size()));
    int r = 0;
    for (const auto& [y, group] : rows) {
        grid.lattice_y.push_back(y);
        for (size_t c = 0; c < xs.size(); ++c) {
            double acc = 0.0;
            for (const ApCurve* curve : group) acc += curve->points[c].ap;
            const double ap = acc / double(group.size());
            grid.lattice.at(r, int(c)) = ap;
            grid.samples.push_back({y, xs[c], ap, int(group.size())});
        }
        ++r;
    }

    grid.log_y = grid.lattice_y.back() / std::max(1e-300, grid.lattice_y.front()) >= 100.0 &&
                 grid.lattice_y.front() > 0.0;
    grid.dense_y = dense_axis(grid.lattice_y, options.dense_ny, grid.log_y);
    grid.dense_x = dense_axis(grid.lattice_x, options.dense_nx, false);
    grid.dense = Plane<double>(int(grid.dense_x.size()), int(grid.dense_y.size()));
    for (size_t iy = 0; iy < grid.dense_y.size(); ++iy)
        for (size_t ix = 0; ix < grid.dense_x.size(); ++ix)
            grid.dense.at(int(iy), int(ix)) = grid.value_at(grid.dense_y[iy], grid.dense_x[ix]);
    return grid;
}

namespace {

struct Segment {
    std::pair<double, double> a, b;  // (x, y)
};

// Marching squares on one cell; corners v00=(x0,y0), v01=(x1,y0),
// v10=(x0,y1), v11=(x1,y1). Emits 0, 1, or 2 segments.
void cell_segments(double level, double x0, double x1, double y0, double y1, double v00,
                   double v01, double v10, double v11, std::vector<Segment>& out) {
    const int code = (v00 > level ? 1 : 0) | (v01 > level ? 2 : 0) | (v10 > level ? 4 : 0) |
                     (v11 > level ? 8 : 0);
    if (code == 0 || code == 15) return;

    auto lerp = [&](double a, double b, double pa, double pb) {
        return pa + (level - a) / (b - a) * (pb - pa);
    };
    // Edge crossing points (defined only where the corner signs differ).
    const std::pair<double, double> top{lerp(v00, v01, x0, x1), y0};
    const std::pair<double, double> bottom{lerp(v10, v11, x0, x1), y1};
    const std::pair<double, double> left{x0, lerp(v00, v10, y0, y1)};
    const std::pair<double, double> right{x1, lerp(v01, v11, y0, y1)};

    switch (code) {
        case 1: case 14: out.push_back({top, left}); break;
        case 2: case 13: out.push_back({top, right}); break;
        case 3: case 12: out.push_back({left, right}); break;
        case 4: case 11: out.push_back({left, bottom}); break;
        case 5: case 10: out.push_back({top, bottom}); break;
        case 7: case 8: out.push_back({right, bottom}); break;
        case 6: case 9: {
            // Saddle: split by the cell-center value.
            const double center = 0.25 * (v00 + v01 + v10 + v11);
            const bool center_in = center > level;
            if ((code == 6) == center_in) {
                out.push_back({top, right});
                out.push_back({left, bottom});
            } else {
                out.push_back({top, left});
                out.push_back({right, bottom});
            }
            break;
        }
        default: break;
    }
}

}  // namespace

std::vector<ContourPolyline> contours(const SpmGrid& grid, const std::vector<double>& levels) {
    std::vector<ContourPolyline> out;
    const auto& ys = grid.dense_y;
    const auto& xs = grid.dense_x;
    for (double level : levels) {
        if (!(level > 0.0) || !(level < 1.0))
            throw data_error("contours: levels must lie in (0, 1)");
        std::vector<Segment> segments;
        for (size_t iy = 0; iy + 1 < ys.size(); ++iy) {
            for (size_t ix = 0; ix + 1 < xs.size(); ++ix) {
                cell_segments(level, xs[ix], xs[ix + 1], ys[iy], ys[iy + 1],
                              grid.dense.at(int(iy), int(ix)), grid.dense.at(int(iy), int(ix + 1)),
                              grid.dense.at(int(iy + 1), int(ix)),
                              grid.dense.at(int(iy + 1), int(ix + 1)), segments);
            }
        }
        if (segments.empty()) continue;

        // Chain segments into polylines; shared endpoints are bitwise equal
        // because adjacent cells interpolate the same corner pair.
        using Key = std::pair<double, double>;
        std::multimap<Key, size_t> by_endpoint;
        for (size_t i = 0; i < segments.size(); ++i) {
            by_endpoint.insert({segments[i].a, i});
            by_endpoint.insert({segments[i].b, i});
        }
        std::vector<bool> used(segments.size(), false);
        auto take_from = [&](const Key& pt, size_t& seg) -> bool {
            auto [lo, hi] = by_endpoint.equal_range(pt);
            for (auto it = lo; it != hi; ++it) {
                if (!used[it->second]) {
                    seg = it->second;
                    return true;
                }
            }
            return false;
        };
        for (size_t start = 0; start < segments.size(); ++start) {
            if (used[start]) continue;
            used[start] = true;
            ContourPolyline line;
            line.level = level;
            line.points = {segments[start].a, segments[start].b};
            // Extend forward, then backward.
            for (int dir = 0; dir < 2; ++dir) {
                for (;;) {
                    const Key tail = dir == 0 ? line.points.back() : line.points.front();
                    size_t next;
                    if (!take_from(tail, next)) break;
                    used[next] = true;
                    const Key nt = segments[next].a == tail ? segments[next].b : segments[next].a;
                    if (dir == 0) line.points.push_back(nt);
                    else line.points.insert(line.points.begin(), nt);
                }
            }
            line.closed = line.points.size() > 2 && line.points.front() == line.points.back();
            out.push_back(std::move(line));
        }
    }
    return out;
}

void emit_csv(const SpmGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    char buf[64];
    out << grid.y_label;
    for (double x : grid.lattice_x) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        out << ',' << buf;
    }
    out << "\n";
    for (size_t r = 0; r < grid.lattice_y.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", grid.lattice_y[r]);
        out << buf;
        for (size_t c = 0; c < grid.lattice_x.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", grid.lattice.at(int(r), int(c)));
            out << ',' << buf;
        }
        out << "\n";
    }
}

SpmGrid read_spm_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw format_error("empty spm csv: " + path);
    SpmGrid grid;
    {
        std::istringstream header(line);
        std::string field;
        if (!std::getline(header, field, ',')) throw format_error("bad spm header");
        grid.y_label = field;
        while (std::getline(header, field, ',')) grid.lattice_x.push_back(std::stod(field));
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        if (!std::getline(row, field, ',')) throw format_error("bad spm row: " + line);
        grid.lattice_y.push_back(std::stod(field));
        std::vector<double> vals;
        while (std::getline(row, field, ',')) vals.push_back(std::stod(field));
        if (vals.size() != grid.lattice_x.size())
            throw format_error("spm row width mismatch: " + line);
        rows.push_back(std::move(vals));
    }
    grid.lattice = Plane<double>(int(grid.lattice_x.size()), int(grid.lattice_y.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c)
            grid.lattice.at(int(r), int(c)) = rows[r][c];
    return grid;
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void emit_svg(const SpmGrid& grid, const std::vector<ContourPolyline>& iso,
              const std::string& path, const SvgOptions& options) {
    const double W = options.width_px, H = options.height_px;
    const double ml = 72, mr = 24, mt = 24, mb = 56;  // plot margins
    const double pw = W - ml - mr, ph = H - mt - mb;

    const double x0 = grid.lattice_x.front(), x1 = grid.lattice_x.back();
    const double y0 = grid.lattice_y.front(), y1 = grid.lattice_y.back();
    auto map_x = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto map_y = [&](double y) {
        const double t = grid.log_y ? (std::log(y) - std::log(y0)) / (std::log(y1) - std::log(y0))
                                    : (y - y0) / (y1 - y0);
        return mt + (1.0 - t) * ph;  // y axis increases upward
    };

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width_px
        << "\" height=\"" << options.height_px << "\" viewBox=\"0 0 " << options.width_px << " "
        << options.height_px << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << options.width_px << "\" height=\""
        << options.height_px << "\" fill=\"white\"/>\n";

    // Dense cells, AP 0 = black to AP 1 = white.
    out << "<g stroke=\"none\">\n";
    for (size_t iy = 0; iy + 1 < grid.dense_y.size(); ++iy) {
        for (size_t ix = 0; ix + 1 < grid.dense_x.size(); ++ix) {
            const double ap = 0.25 * (grid.dense.at(int(iy), int(ix)) +
                                      grid.dense.at(int(iy), int(ix + 1)) +
                                      grid.dense.at(int(iy + 1), int(ix)) +
                                      grid.dense.at(int(iy + 1), int(ix + 1)));
            const int g = int(std::lround(std::clamp(ap, 0.0, 1.0) * 255.0));
            const double px = map_x(grid.dense_x[ix]);
            const double py = map_y(grid.dense_y[iy + 1]);
            const double pw2 = map_x(grid.dense_x[ix + 1]) - px;
            const double ph2 = map_y(grid.dense_y[iy]) - py;
            out << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\""
                << fmt(pw2 + 0.5) << "\" height=\"" << fmt(ph2 + 0.5) << "\" fill=\"rgb(" << g
                << "," << g << "," << g << ")\"/>\n";
        }
    }
    out << "</g>\n";

    out << "<g fill=\"none\" stroke=\"#d08020\" stroke-width=\"1.5\">\n";
    for (const auto& line : iso) {
        out << "<path d=\"";
        for (size_t i = 0; i < line.points.size(); ++i) {
            out << (i == 0 ? "M" : "L") << fmt(map_x(line.points[i].first)) << " "
                << fmt(map_y(line.points[i].second));
        }
        if (line.closed) out << "Z";
        out << "\"/>\n";
    }
    out << "</g>\n";

    // Frame and ticks at the lattice coordinates.
    out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    for (double x : grid.lattice_x) {
        out << "<line x1=\"" << fmt(map_x(x)) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\""
            << fmt(map_x(x)) << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(map_x(x)) << "\" y=\"" << fmt(mt + ph + 18)
            << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
    }
    for (double y : grid.lattice_y) {
        out << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(map_y(y)) << "\" x2=\""
            << fmt(ml) << "\" y2=\"" << fmt(map_y(y)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(map_y(y) + 4)
            << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
    }
    out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(H - 12)
        << "\" text-anchor=\"middle\">distance_m</text>\n";
    out << "<text x=\"14\" y=\"" << fmt(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << fmt(mt + ph / 2) << ")\">" << grid.y_label << "</text>\n";
    out << "</g>\n";

    if (options.od50_marker_x || options.od50_marker_y) {
        out << "<g stroke=\"#cc2020\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\">\n";
        if (options.od50_marker_x) {
            const double mx = map_x(*options.od50_marker_x);
            out << "<line x1=\"" << fmt(mx) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(mx)
                << "\" y2=\"" << fmt(mt + ph) << "\"/>\n";
        }
        if (options.od50_marker_y) {
            const double my = map_y(*options.od50_marker_y);
            out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(my) << "\" x2=\"" << fmt(ml + pw)
                << "\" y2=\"" << fmt(my) << "\"/>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace camsim
