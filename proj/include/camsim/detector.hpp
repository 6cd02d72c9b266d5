#pragma once

#include <string>
#include <vector>

#include "camsim/isp.hpp"
#include "camsim/scene.hpp"

namespace camsim {

struct Detection {
    std::string image_id;
    double x = 0, y = 0, w = 0, h = 0;  // pixels
    double score = 0.0;                 // in [0, 1]
    std::string category = "car";
};

struct DetectionSet {
    std::string detector_name;
    std::vector<Detection> detections;
    std::vector<std::string> warnings;
};

struct BaselineDetectorParams {
    double k_mad = 4.0;     // threshold multiple of the residual MAD
    int min_area_px = 9;    // reject smaller components
    // Box half-width of the residual smoothing applied before thresholding;
    // 0 thresholds the raw per-pixel residual. Smoothing makes detection
    // depend on local contrast instead of per-pixel shot noise, which is
    // what keeps performance flat across well-exposed light levels.
    int smooth_radius = 2;
};

/// Background-subtraction detector: luma, per-row median background,
/// |residual| thresholded at k·MAD, 8-connected components, one scored box
/// per component. Deterministic.
std::vector<Detection> baseline_detect(const RgbImage& image,
                                       const BaselineDetectorParams& params = {});

/// Detection interchange JSON:
/// {"detector": str, "detections": [{"image_id", "bbox": [x,y,w,h],
///  "score", "category": "car"}]}
void save_detections(const DetectionSet& set, const std::string& path);

/// Parses and validates against the manifest: unknown image ids are
/// rejected, scores in (1, 1+1e-6] are clamped with a warning.
DetectionSet load_detections(const std::string& path, const SceneManifest& manifest);

}  // namespace camsim
