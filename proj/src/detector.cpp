#include "camsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace camsim {

namespace {

double median_of(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

// Box filter with clamped borders, radius r (window 2r+1), separable.
Plane<double> box_smooth(const Plane<double>& in, int r) {
    if (r <= 0) return in;
    const int w = in.width(), h = in.height();
    Plane<double> tmp(w, h), out(w, h);
    const double inv = 1.0 / (2 * r + 1);
    for (int y = 0; y < h; ++y) {
        const double* src = in.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int dx = -r; dx <= r; ++dx) acc += src[std::clamp(x + dx, 0, w - 1)];
            tmp.at(y, x) = acc * inv;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int dy = -r; dy <= r; ++dy) acc += tmp.at(std::clamp(y + dy, 0, h - 1), x);
            out.at(y, x) = acc * inv;
        }
    }
    return out;
}

}  // namespace

std::vector<Detection> baseline_detect(const RgbImage& image,
                                       const BaselineDetectorParams& params) {
    const int w = image.width, h = image.height;
    if (w <= 0 || h <= 0) return {};

    Plane<double> luma(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            luma.at(y, x) = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                            0.114 * image.at(y, x, 2);

    // Row-median background model.
    Plane<double> residual(w, h);
    std::vector<double> scratch(static_cast<size_t>(w), 0.0);
    for (int y = 0; y < h; ++y) {
        scratch.assign(luma.row(y), luma.row(y) + w);
        const double bg = median_of(scratch);
        for (int x = 0; x < w; ++x) residual.at(y, x) = luma.at(y, x) - bg;
    }

    const Plane<double> smoothed = box_smooth(residual, params.smooth_radius);

    // MAD of the smoothed residual.
    std::vector<double> all(smoothed.values());
    const double med = median_of(all);
    for (auto& v : all) v = std::fabs(v - med);
    const double mad = median_of(all);
    const double threshold = params.k_mad * mad;

    // 8-connected components of |residual| above threshold (strict, so a
    // constant image yields nothing even when MAD is zero).
    Plane<int32_t> label(w, h, -1);
    std::vector<Detection> out;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (label.at(y, x) >= 0 || !(std::fabs(smoothed.at(y, x)) > threshold)) continue;
            const int id = int(out.size());
            int min_x = x, max_x = x, min_y = y, max_y = y;
            int64_t area = 0;
            double abs_sum = 0.0;
            stack.push_back({y, x});
            label.at(y, x) = id;
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                ++area;
                abs_sum += std::fabs(smoothed.at(cy, cx));
                min_x = std::min(min_x, cx);
                max_x = std::max(max_x, cx);
                min_y = std::min(min_y, cy);
                max_y = std::max(max_y, cy);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        if (label.at(ny, nx) >= 0) continue;
                        if (!(std::fabs(smoothed.at(ny, nx)) > threshold)) continue;
                        label.at(ny, nx) = id;
                        stack.push_back({ny, nx});
                    }
                }
            }
            if (area < params.min_area_px) {
                out.push_back({});  // placeholder keeps label ids aligned
                out.back().score = -1.0;
                continue;
            }
            Detection det;
            det.x = min_x;
            det.y = min_y;
            det.w = max_x - min_x + 1;
            det.h = max_y - min_y + 1;
            const double mean_abs = abs_sum / double(area);
            det.score = threshold > 0.0
                            ? std::min(1.0, mean_abs / (2.0 * params.k_mad * mad))
                            : 1.0;
            out.push_back(std::move(det));
        }
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const Detection& d) { return d.score < 0.0; }),
              out.end());
    return out;
}

void save_detections(const DetectionSet& set, const std::string& path) {
    nlohmann::json j;
    j["detector"] = set.detector_name;
    nlohmann::json dets = nlohmann::json::array();
    for (const auto& d : set.detections) {
        nlohmann::json e;
        e["image_id"] = d.image_id;
        e["bbox"] = {d.x, d.y, d.w, d.h};
        e["score"] = d.score;
        e["category"] = d.category;
        dets.push_back(std::move(e));
    }
    j["detections"] = std::move(dets);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

DetectionSet load_detections(const std::string& path, const SceneManifest& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("detection json parse error: ") + e.what());
    }

    DetectionSet set;
    try {
        set.detector_name = j.at("detector").get<std::string>();
        for (const auto& e : j.at("detections")) {
            Detection d;
            d.image_id = e.at("image_id").get<std::string>();
            const auto& bbox = e.at("bbox");
            if (!bbox.is_array() || bbox.size() != 4)
                throw format_error("detection bbox must be [x, y, w, h]");
            d.x = bbox[0].get<double>();
            d.y = bbox[1].get<double>();
            d.w = bbox[2].get<double>();
            d.h = bbox[3].get<double>();
            d.score = e.at("score").get<double>();
            d.category = e.value("category", std::string("car"));

            if (!manifest.find(d.image_id))
                throw data_error("detection references unknown image_id '" + d.image_id + "'");
            if (!(d.w > 0.0) || !(d.h > 0.0))
                throw data_error("detection for '" + d.image_id + "' has non-positive box size");
            if (d.score > 1.0) {
                if (d.score <= 1.0 + 1e-6) {
                    set.warnings.push_back("score clamped to 1.0 for image_id '" + d.image_id +
                                           "'");
                    d.score = 1.0;
                } else {
                    throw data_error("detection score out of range for '" + d.image_id + "'");
                }
            }
            if (d.score < 0.0)
                throw data_error("detection score out of range for '" + d.image_id + "'");
            set.detections.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("detection json field error: ") + e.what());
    }
    return set;
}

}  // namespace camsim
