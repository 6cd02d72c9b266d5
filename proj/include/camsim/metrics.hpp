#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "camsim/detector.hpp"

namespace camsim {

struct Box {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

/// {0.50, 0.55, ..., 0.95}
std::vector<double> default_iou_thresholds();

struct GtImage {
    std::string image_id;
    std::vector<Box> boxes;
};

/// COCO-style AP: detections sorted by score (ties by image_id, then
/// insertion order), greedy-matched per threshold to the unmatched GT with
/// highest IoU ≥ τ, 101-point interpolated AP, averaged over thresholds.
/// Throws data_error when the GT set is empty.
double coco_ap(const std::vector<GtImage>& gt, const std::vector<Detection>& detections,
               const std::vector<double>& thresholds = default_iou_thresholds());

/// Per-scene match bookkeeping (scores and per-threshold TP flags), enough
/// to re-pool AP under scene resampling. Matching is per image, so the
/// flags do not depend on which other scenes are pooled.
struct SceneMatchRecord {
    std::string scene_id;
    double distance_m = 0.0;
    int n_gt = 1;
    std::vector<double> scores;            // one per detection, detector order
    std::vector<std::vector<uint8_t>> tp;  // [threshold][detection]
};

SceneMatchRecord match_scene(const std::string& scene_id, double distance_m,
                             const std::vector<Box>& gt_boxes,
                             const std::vector<Detection>& dets,
                             const std::vector<double>& thresholds = default_iou_thresholds());

/// Pooled AP over a multiset of scene records.
double ap_from_records(const std::vector<const SceneMatchRecord*>& records,
                       size_t threshold_count);

struct ApPoint {
    double distance_m = 0.0;
    double ap = 0.0;
    int n_scenes = 0;
};

struct ApCurve {
    std::string camera_id;
    std::string condition;  // "day" | "night" | lux value
    std::vector<ApPoint> points;
};

/// Partitions scenes by distance and computes AP per partition. gt boxes
/// are per scene_id in the detector's pixel coordinates.
ApCurve ap_by_distance(const std::map<std::string, std::pair<double, Box>>& gt_by_scene,
                       const std::vector<Detection>& dets,
                       const std::vector<double>& thresholds = default_iou_thresholds());

void save_curve_csv(const ApCurve& curve, const std::string& path);
std::vector<ApCurve> load_curves_csv(const std::string& path);

enum class Od50Method { Interpolated, Extrapolated, BelowRange };
std::string to_string(Od50Method m);

struct Od50Result {
    double od50_m = 0.0;
    Od50Method method = Od50Method::Interpolated;
    std::optional<double> bootstrap_std_m;
    int bootstrap_used = 0;
    int bootstrap_excluded = 0;
};

/// Distance where AP crosses 0.50: linear interpolation at the first
/// descending crossing; linear extrapolation from the last segment when the
/// curve never crosses; below_range when AP < 0.5 already at the nearest
/// distance.
Od50Result od50(const ApCurve& curve);

struct BootstrapResult {
    double std_m = 0.0;
    int used = 0;
    int excluded = 0;
};

/// Resamples scenes with replacement within each distance, recomputes the
/// AP curve and OD50 per replicate, and reports the standard deviation of
/// the interpolated replicates (others are excluded and counted).
BootstrapResult bootstrap_od50(const std::vector<SceneMatchRecord>& records, int n_replicates,
                               uint64_t seed, size_t threshold_count = 10, int workers = 1);

/// Spearman rank correlation (average ranks on ties).
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace camsim
