#include "camsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace camsim {

double iou(const Box& a, const Box& b) {
    const double ix = std::max(a.x, b.x);
    const double iy = std::max(a.y, b.y);
    const double ix2 = std::min(a.x + a.w, b.x + b.w);
    const double iy2 = std::min(a.y + a.h, b.y + b.h);
    const double inter = std::max(0.0, ix2 - ix) * std::max(0.0, iy2 - iy);
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<double> default_iou_thresholds() {
    std::vector<double> out;
    for (int p = 50; p <= 95; p += 5) out.push_back(p / 100.0);
    return out;
}

namespace {

// Detections ordered by score descending; ties by image_id, then by
// insertion order. This ordering is part of the metric definition.
std::vector<size_t> ranked_order(const std::vector<Detection>& dets) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].image_id != dets[b].image_id) return dets[a].image_id < dets[b].image_id;
        return a < b;
    });
    return order;
}

double ap_101(const std::vector<double>& recall, const std::vector<double>& precision) {
    double acc = 0.0;
    for (int j = 0; j <= 100; ++j) {
        const double r = j / 100.0;
        double best = 0.0;
        for (size_t k = 0; k < recall.size(); ++k)
            if (recall[k] >= r) best = std::max(best, precision[k]);
        acc += best;
    }
    return acc / 101.0;
}

}  // namespace

double coco_ap(const std::vector<GtImage>& gt, const std::vector<Detection>& detections,
               const std::vector<double>& thresholds) {
    size_t n_gt = 0;
    std::map<std::string, const GtImage*> by_id;
    for (const auto& img : gt) {
        n_gt += img.boxes.size();
        by_id[img.image_id] = &img;
    }
    if (n_gt == 0) throw data_error("coco_ap: empty ground-truth set (AP undefined)");

    const auto order = ranked_order(detections);
    double acc = 0.0;
    for (double tau : thresholds) {
        std::map<std::string, std::vector<bool>> matched;
        std::vector<double> recall, precision;
        recall.reserve(order.size());
        precision.reserve(order.size());
        int64_t tp = 0, fp = 0;
        for (size_t idx : order) {
            const auto& det = detections[idx];
            const Box det_box{det.x, det.y, det.w, det.h};
            bool is_tp = false;
            auto it = by_id.find(det.image_id);
            if (it != by_id.end()) {
                const auto& boxes = it->second->boxes;
                auto& used = matched[det.image_id];
                used.resize(boxes.size(), false);
                int best = -1;
                double best_iou = 0.0;
                for (size_t g = 0; g < boxes.size(); ++g) {
                    if (used[g]) continue;
                    const double v = iou(det_box, boxes[g]);
                    if (v >= tau && v > best_iou) {
                        best_iou = v;
                        best = int(g);
                    }
                }
                if (best >= 0) {
                    used[size_t(best)] = true;
                    is_tp = true;
                }
            }
            is_tp ? ++tp : ++fp;
            recall.push_back(double(tp) / double(n_gt));
            precision.push_back(double(tp) / double(tp + fp));
        }
        acc += ap_101(recall, precision);
    }
    return acc / double(thresholds.size());
}

SceneMatchRecord match_scene(const std::string& scene_id, double distance_m,
                             const std::vector<Box>& gt_boxes,
                             const std::vector<Detection>& dets,
                             const std::vector<double>& thresholds) {
    SceneMatchRecord rec;
    rec.scene_id = scene_id;
    rec.distance_m = distance_m;
    rec.n_gt = int(gt_boxes.size());
    // Rank within the scene (score desc, insertion order on ties) so greedy
    // matching here agrees with the pooled evaluation.
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });

    rec.scores.resize(dets.size());
    for (size_t i = 0; i < dets.size(); ++i) rec.scores[i] = dets[i].score;
    rec.tp.assign(thresholds.size(), std::vector<uint8_t>(dets.size(), 0));
    for (size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<bool> used(gt_boxes.size(), false);
        for (size_t idx : order) {
            const Box det_box{dets[idx].x, dets[idx].y, dets[idx].w, dets[idx].h};
            int best = -1;
            double best_iou = 0.0;
            for (size_t g = 0; g < gt_boxes.size(); ++g) {
                if (used[g]) continue;
                const double v = iou(det_box, gt_boxes[g]);
                if (v >= thresholds[t] && v > best_iou) {
                    best_iou = v;
                    best = int(g);
                }
            }
            if (best >= 0) {
                used[size_t(best)] = true;
                rec.tp[t][idx] = 1;
            }
        }
    }
    return rec;
}

double ap_from_records(const std::vector<const SceneMatchRecord*>& records,
                       size_t threshold_count) {
    int64_t n_gt = 0;
    struct Entry {
        double score;
        size_t rec_pos;  // position in the (resampled) record sequence
        size_t det_idx;
    };
    std::vector<Entry> entries;
    for (size_t p = 0; p < records.size(); ++p) {
        n_gt += records[p]->n_gt;
        for (size_t d = 0; d < records[p]->scores.size(); ++d)
            entries.push_back({records[p]->scores[d], p, d});
    }
    if (n_gt == 0) throw data_error("ap_from_records: no ground truth in pool");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.rec_pos != b.rec_pos) return a.rec_pos < b.rec_pos;
        return a.det_idx < b.det_idx;
    });

    double acc = 0.0;
    std::vector<double> recall(entries.size()), precision(entries.size());
    for (size_t t = 0; t < threshold_count; ++t) {
        int64_t tp = 0, fp = 0;
        for (size_t k = 0; k < entries.size(); ++k) {
            records[entries[k].rec_pos]->tp[t][entries[k].det_idx] ? ++tp : ++fp;
            recall[k] = double(tp) / double(n_gt);
            precision[k] = double(tp) / double(tp + fp);
        }
        acc += ap_101(recall, precision);
    }
    return acc / double(threshold_count);
}

ApCurve ap_by_distance(const std::map<std::string, std::pair<double, Box>>& gt_by_scene,
                       const std::vector<Detection>& dets,
                       const std::vector<double>& thresholds) {
    if (gt_by_scene.empty()) throw data_error("ap_by_distance: no scenes");

    std::map<double, std::vector<GtImage>> gt_parts;
    std::map<double, std::vector<Detection>> det_parts;
    std::map<std::string, double> distance_of;
    for (const auto& [id, entry] : gt_by_scene) {
        gt_parts[entry.first].push_back({id, {entry.second}});
        distance_of[id] = entry.first;
    }
    for (const auto& d : dets) {
        auto it = distance_of.find(d.image_id);
        if (it == distance_of.end())
            throw data_error("ap_by_distance: detection for unknown scene '" + d.image_id + "'");
        det_parts[it->second].push_back(d);
    }

    ApCurve curve;
    for (const auto& [distance, gts] : gt_parts) {
        if (gts.empty()) throw data_error("ap_by_distance: empty distance partition");
        ApPoint pt;
        pt.distance_m = distance;
        pt.n_scenes = int(gts.size());
        auto it = det_parts.find(distance);
        static const std::vector<Detection> kNone;
        pt.ap = coco_ap(gts, it != det_parts.end() ? it->second : kNone, thresholds);
        curve.points.push_back(pt);
    }
    return curve;
}

void save_curve_csv(const ApCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "camera_id,condition,distance_m,ap,n_scenes\n";
    char buf[64];
    for (const auto& p : curve.points) {
        out << curve.camera_id << ',' << curve.condition << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.distance_m);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.ap);
        out << buf << ',' << p.n_scenes << "\n";
    }
}

std::vector<ApCurve> load_curves_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("camera_id,", 0) != 0)
        throw format_error("unexpected ap curve header in " + path);
    std::vector<ApCurve> curves;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string camera, condition, field;
        ApPoint pt;
        if (!std::getline(row, camera, ',') || !std::getline(row, condition, ','))
            throw format_error("bad ap curve row: " + line);
        if (!std::getline(row, field, ',')) throw format_error("bad ap curve row: " + line);
        pt.distance_m = std::stod(field);
        if (!std::getline(row, field, ',')) throw format_error("bad ap curve row: " + line);
        pt.ap = std::stod(field);
        if (!std::getline(row, field, ',')) throw format_error("bad ap curve row: " + line);
        pt.n_scenes = std::stoi(field);

        auto it = std::find_if(curves.begin(), curves.end(), [&](const ApCurve& c) {
            return c.camera_id == camera && c.condition == condition;
        });
        if (it == curves.end()) {
            curves.push_back({camera, condition, {}});
            it = std::prev(curves.end());
        }
        it->points.push_back(pt);
    }
    return curves;
}

std::string to_string(Od50Method m) {
    switch (m) {
        case Od50Method::Interpolated: return "interpolated";
        case Od50Method::Extrapolated: return "extrapolated";
        case Od50Method::BelowRange: return "below_range";
    }
    return "interpolated";
}

Od50Result od50(const ApCurve& curve) {
    const auto& pts = curve.points;
    if (pts.size() < 2) throw data_error("od50: curve needs at least 2 points");
    for (size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].distance_m > pts[i - 1].distance_m))
            throw data_error("od50: distances must be strictly increasing");

    Od50Result out;
    if (pts.front().ap < 0.5) {
        out.method = Od50Method::BelowRange;
        out.od50_m = pts.front().distance_m;
        return out;
    }
    for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].ap == 0.5) {
            out.method = Od50Method::Interpolated;
            out.od50_m = pts[i].distance_m;
            return out;
        }
        if (i + 1 < pts.size() && pts[i].ap > 0.5 && pts[i + 1].ap < 0.5) {
            const double d0 = pts[i].distance_m, d1 = pts[i + 1].distance_m;
            const double a0 = pts[i].ap, a1 = pts[i + 1].ap;
            out.method = Od50Method::Interpolated;
            out.od50_m = d0 + (d1 - d0) * (a0 - 0.5) / (a0 - a1);
            return out;
        }
    }
    // Never crosses: extrapolate the last segment.
    const auto& p0 = pts[pts.size() - 2];
    const auto& p1 = pts.back();
    out.method = Od50Method::Extrapolated;
    const double slope = (p1.ap - p0.ap) / (p1.distance_m - p0.distance_m);
    out.od50_m = slope < 0.0 ? p1.distance_m + (0.5 - p1.ap) / slope
                             : std::numeric_limits<double>::infinity();
    return out;
}

BootstrapResult bootstrap_od50(const std::vector<SceneMatchRecord>& records, int n_replicates,
                               uint64_t seed, size_t threshold_count, int workers) {
    if (n_replicates < 2) throw data_error("bootstrap_od50: need at least 2 replicates");
    std::map<double, std::vector<const SceneMatchRecord*>> by_distance;
    for (const auto& r : records) by_distance[r.distance_m].push_back(&r);
    if (by_distance.size() < 2)
        throw data_error("bootstrap_od50: need at least 2 distances");

    std::vector<double> values(size_t(n_replicates),
                               std::numeric_limits<double>::quiet_NaN());
    parallel_for(n_replicates, workers, [&](int64_t b) {
        Rng rng(derive_seed(seed, hash_str("bootstrap"), uint64_t(b)));
        ApCurve curve;
        for (const auto& [distance, pool] : by_distance) {
            std::vector<const SceneMatchRecord*> sample;
            sample.reserve(pool.size());
            for (size_t i = 0; i < pool.size(); ++i)
                sample.push_back(pool[rng.below(pool.size())]);
            ApPoint pt;
            pt.distance_m = distance;
            pt.n_scenes = int(sample.size());
            pt.ap = ap_from_records(sample, threshold_count);
            curve.points.push_back(pt);
        }
        const Od50Result r = od50(curve);
        if (r.method == Od50Method::Interpolated) values[size_t(b)] = r.od50_m;
    });

    BootstrapResult out;
    double mean = 0.0;
    for (double v : values) {
        if (std::isnan(v)) {
            ++out.excluded;
        } else {
            ++out.used;
            mean += v;
        }
    }
    if (out.used < 2)
        throw data_error("bootstrap_od50: fewer than 2 interpolated replicates (" +
                         std::to_string(out.excluded) + " excluded)");
    mean /= out.used;
    double ss = 0.0;
    for (double v : values)
        if (!std::isnan(v)) ss += (v - mean) * (v - mean);
    out.std_m = std::sqrt(ss / double(out.used - 1));
    return out;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw data_error("spearman_rho: need two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(v.size());
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (double(i) + double(j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= rx.size();
    my /= ry.size();
    double num = 0, dx = 0, dy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    const double den = std::sqrt(dx * dy);
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace camsim
