#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"

#include "camsim/metrics.hpp"

using namespace camsim;

namespace {

// Brute-force AP oracle: a direct transcription of the metric definition
// with naive data structures, kept independent of the library path.
double oracle_iou(const Box& a, const Box& b) {
    const double x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
    const double inter = (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0.0;
    const double u = a.w * a.h + b.w * b.h - inter;
    return u > 0 ? inter / u : 0.0;
}

double oracle_ap(const std::vector<GtImage>& gt, const std::vector<Detection>& dets,
                 const std::vector<double>& taus) {
    size_t n_gt = 0;
    for (const auto& g : gt) n_gt += g.boxes.size();

    // Documented ranking: score desc, image_id asc, insertion order asc.
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].image_id != dets[b].image_id) return dets[a].image_id < dets[b].image_id;
        return a < b;
    });

    double total = 0.0;
    for (double tau : taus) {
        std::vector<std::vector<int>> taken(gt.size());
        for (size_t g = 0; g < gt.size(); ++g) taken[g].assign(gt[g].boxes.size(), 0);
        std::vector<int> tp_flags;
        for (size_t idx : order) {
            const auto& d = dets[idx];
            int best_img = -1, best_box = -1;
            double best = -1.0;
            for (size_t g = 0; g < gt.size(); ++g) {
                if (gt[g].image_id != d.image_id) continue;
                for (size_t k = 0; k < gt[g].boxes.size(); ++k) {
                    if (taken[g][k]) continue;
                    const double v = oracle_iou(Box{d.x, d.y, d.w, d.h}, gt[g].boxes[k]);
                    if (v >= tau && v > best) {
                        best = v;
                        best_img = int(g);
                        best_box = int(k);
                    }
                }
            }
            if (best_img >= 0) {
                taken[size_t(best_img)][size_t(best_box)] = 1;
                tp_flags.push_back(1);
            } else {
                tp_flags.push_back(0);
            }
        }
        // Exact PR construction, then the literal 101-point scan.
        double ap = 0.0;
        for (int j = 0; j <= 100; ++j) {
            const double r = j / 100.0;
            double best_prec = 0.0;
            int tp = 0;
            for (size_t k = 0; k < tp_flags.size(); ++k) {
                tp += tp_flags[k];
                const double recall = double(tp) / double(n_gt);
                const double prec = double(tp) / double(k + 1);
                if (recall >= r) best_prec = std::max(best_prec, prec);
            }
            ap += best_prec;
        }
        total += ap / 101.0;
    }
    return total / double(taus.size());
}

struct RandomInstance {
    std::vector<GtImage> gt;
    std::vector<Detection> dets;
};

RandomInstance random_instance(Rng& rng, bool quantize_scores) {
    RandomInstance inst;
    const int n_images = 1 + int(rng.below(5));
    for (int i = 0; i < n_images; ++i) {
        GtImage img;
        img.image_id = "img" + std::to_string(i);
        const int n_boxes = int(rng.below(5));  // up to 4 (may be 0)
        for (int b = 0; b < n_boxes; ++b) {
            img.boxes.push_back(Box{double(rng.below(20)), double(rng.below(20)),
                                    double(1 + rng.below(12)), double(1 + rng.below(12))});
        }
        inst.gt.push_back(std::move(img));
    }
    const int n_dets = int(rng.below(7));
    for (int d = 0; d < n_dets; ++d) {
        Detection det;
        det.image_id = "img" + std::to_string(rng.below(uint64_t(n_images)));
        // Half the detections perturb a GT box so IoU values spread widely.
        const auto& img = inst.gt[size_t(rng.below(uint64_t(n_images)))];
        if (!img.boxes.empty() && rng.below(2)) {
            const Box& g = img.boxes[size_t(rng.below(img.boxes.size()))];
            det.image_id = img.image_id;
            det.x = g.x + double(rng.below(5)) - 2.0;
            det.y = g.y + double(rng.below(5)) - 2.0;
            det.w = std::max(1.0, g.w + double(rng.below(5)) - 2.0);
            det.h = std::max(1.0, g.h + double(rng.below(5)) - 2.0);
        } else {
            det.x = double(rng.below(20));
            det.y = double(rng.below(20));
            det.w = double(1 + rng.below(12));
            det.h = double(1 + rng.below(12));
        }
        det.score = quantize_scores ? double(rng.below(11)) / 10.0 : rng.uniform();
        inst.dets.push_back(std::move(det));
    }
    return inst;
}

ApCurve curve_of(std::vector<std::pair<double, double>> pts) {
    ApCurve c;
    for (auto [d, ap] : pts) c.points.push_back({d, ap, 10});
    return c;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("iou: identity, disjoint, hand case, symmetry") {
    const Box a{0, 0, 2, 2}, b{1, 1, 2, 2}, c{10, 10, 2, 2};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, c) == 0.0);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(iou(a, b) == iou(b, a));
    const Box degenerate{0, 0, 0, 0};
    CHECK(iou(degenerate, degenerate) == 0.0);
}

TEST_CASE("coco_ap: hand-checked anchor cases") {
    std::vector<GtImage> gt = {{"i0", {Box{0, 0, 10, 10}}}};

    // Perfect detection: AP = 1 at every threshold.
    std::vector<Detection> perfect = {{"i0", 0, 0, 10, 10, 0.9, "car"}};
    CHECK(coco_ap(gt, perfect) == 1.0);

    // Single detection at IoU exactly 0.60 passes tau in {0.50, 0.55, 0.60}.
    std::vector<Detection> partial = {{"i0", 0, 0, 10, 6, 0.9, "car"}};
    CHECK(iou(Box{0, 0, 10, 6}, gt[0].boxes[0]) == 0.6);
    CHECK(coco_ap(gt, partial) == doctest::Approx(0.30).epsilon(1e-12));

    CHECK(coco_ap(gt, {}) == 0.0);

    CHECK_THROWS_AS(coco_ap({}, perfect), data_error);
    std::vector<GtImage> empty_boxes = {{"i0", {}}};
    CHECK_THROWS_AS(coco_ap(empty_boxes, perfect), data_error);
}

TEST_CASE("coco_ap: false positives in other images lower precision") {
    std::vector<GtImage> gt = {{"i0", {Box{0, 0, 10, 10}}}, {"i1", {Box{0, 0, 10, 10}}}};
    std::vector<Detection> dets = {
        {"i0", 0, 0, 10, 10, 0.9, "car"},
        {"i1", 50, 50, 5, 5, 0.8, "car"},  // misses
    };
    // tau-independent: recall reaches only 0.5 with precision 1, so the
    // 101-point average is 51/101.
    CHECK(coco_ap(gt, dets) == doctest::Approx(51.0 / 101.0).epsilon(1e-12));
}

TEST_CASE("coco_ap: equals the brute-force oracle on 500 random instances") {
    Rng rng(2024);
    int n_nonempty = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const RandomInstance inst = random_instance(rng, trial % 2 == 0);
        size_t n_gt = 0;
        for (const auto& g : inst.gt) n_gt += g.boxes.size();
        if (n_gt == 0) continue;
        ++n_nonempty;
        const double expected = oracle_ap(inst.gt, inst.dets, default_iou_thresholds());
        const double actual = coco_ap(inst.gt, inst.dets);
        CHECK(actual == expected);
    }
    CHECK(n_nonempty > 300);
}

TEST_CASE("coco_ap: invariant to strictly monotone score transforms") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        RandomInstance inst = random_instance(rng, false);
        size_t n_gt = 0;
        for (const auto& g : inst.gt) n_gt += g.boxes.size();
        if (n_gt == 0 || inst.dets.empty()) continue;
        const double base = coco_ap(inst.gt, inst.dets);
        for (auto& d : inst.dets) d.score = 1.0 / (1.0 + std::exp(-4.0 * (d.score - 0.3)));
        CHECK(coco_ap(inst.gt, inst.dets) == base);
    }
}

TEST_CASE("match records pool to the same AP as coco_ap") {
    Rng rng(7);
    const auto taus = default_iou_thresholds();
    for (int trial = 0; trial < 60; ++trial) {
        // One GT per image, like the metric collections.
        const int n_scenes = 2 + int(rng.below(4));
        std::vector<GtImage> gt;
        std::vector<Detection> dets;
        std::vector<SceneMatchRecord> records;
        std::vector<const SceneMatchRecord*> ptrs;
        for (int s = 0; s < n_scenes; ++s) {
            const std::string id = "s" + std::to_string(s);
            const Box box{double(rng.below(10)), double(rng.below(10)),
                          double(4 + rng.below(8)), double(4 + rng.below(8))};
            gt.push_back({id, {box}});
            std::vector<Detection> scene_dets;
            const int nd = int(rng.below(4));
            for (int d = 0; d < nd; ++d) {
                Detection det;
                det.image_id = id;
                det.x = box.x + double(rng.below(5)) - 2;
                det.y = box.y + double(rng.below(5)) - 2;
                det.w = std::max(1.0, box.w + double(rng.below(3)) - 1);
                det.h = std::max(1.0, box.h + double(rng.below(3)) - 1);
                det.score = rng.uniform();
                scene_dets.push_back(det);
                dets.push_back(det);
            }
            records.push_back(match_scene(id, 50.0, {box}, scene_dets, taus));
        }
        for (const auto& r : records) ptrs.push_back(&r);
        CHECK(ap_from_records(ptrs, taus.size()) ==
              doctest::Approx(coco_ap(gt, dets, taus)).epsilon(1e-12));
    }
}

TEST_CASE("ap_by_distance: perfect, missing, and shape") {
    std::map<std::string, std::pair<double, Box>> gt;
    std::vector<Detection> dets;
    const std::vector<double> distances = {25, 50, 75, 100, 150, 200};
    for (size_t di = 0; di < distances.size(); ++di) {
        for (int s = 0; s < 3; ++s) {
            const std::string id = "d" + std::to_string(int(distances[di])) + "_" +
                                   std::to_string(s);
            const Box box{10, 10, 20, 15};
            gt[id] = {distances[di], box};
            if (distances[di] <= 50) {
                dets.push_back({id, 10, 10, 20, 15, 0.9, "car"});
            }
        }
    }
    const ApCurve curve = ap_by_distance(gt, dets);
    REQUIRE(curve.points.size() == 6);
    for (const auto& p : curve.points) {
        CHECK(p.n_scenes == 3);
        if (p.distance_m <= 50) CHECK(p.ap == 1.0);
        else CHECK(p.ap == 0.0);
    }
    // Unknown scene id in detections is an error.
    std::vector<Detection> stray = {{"nope", 0, 0, 1, 1, 0.5, "car"}};
    CHECK_THROWS_AS(ap_by_distance(gt, stray), data_error);
}

TEST_CASE("od50: interpolation, extrapolation, below range, exact node") {
    const Od50Result a = od50(curve_of({{25, 0.9}, {50, 0.7}, {75, 0.3}}));
    CHECK(a.method == Od50Method::Interpolated);
    CHECK(a.od50_m == doctest::Approx(62.5).epsilon(1e-12));

    const Od50Result b = od50(curve_of({{25, 0.95}, {50, 0.9}, {75, 0.8}}));
    CHECK(b.method == Od50Method::Extrapolated);
    CHECK(b.od50_m > 75.0);

    const Od50Result c = od50(curve_of({{25, 0.4}, {50, 0.2}}));
    CHECK(c.method == Od50Method::BelowRange);
    CHECK(c.od50_m == 25.0);

    const Od50Result d = od50(curve_of({{25, 0.9}, {50, 0.5}, {75, 0.1}}));
    CHECK(d.method == Od50Method::Interpolated);
    CHECK(d.od50_m == 50.0);

    const Od50Result flat = od50(curve_of({{25, 0.9}, {50, 0.9}}));
    CHECK(flat.method == Od50Method::Extrapolated);
    CHECK(std::isinf(flat.od50_m));

    CHECK_THROWS_AS(od50(curve_of({{25, 0.9}})), data_error);
    CHECK_THROWS_AS(od50(curve_of({{50, 0.9}, {25, 0.8}})), data_error);
}

TEST_CASE("bootstrap_od50: zero variance on identical outcomes, seeded determinism") {
    const auto taus = default_iou_thresholds();
    // Records engineered so AP is 1.0 at 25/50 m and 0.0 at 75/100 m: the
    // curve crosses 0.5 between 50 and 75 regardless of resampling.
    std::vector<SceneMatchRecord> records;
    for (double d : {25.0, 50.0, 75.0, 100.0}) {
        for (int s = 0; s < 5; ++s) {
            SceneMatchRecord r;
            r.scene_id = "d" + std::to_string(int(d)) + "_" + std::to_string(s);
            r.distance_m = d;
            r.n_gt = 1;
            if (d <= 50) {
                r.scores = {0.9};
                r.tp.assign(taus.size(), {1});
            } else {
                r.tp.assign(taus.size(), {});
            }
            records.push_back(std::move(r));
        }
    }
    const BootstrapResult a = bootstrap_od50(records, 50, 11, taus.size());
    CHECK(a.std_m == 0.0);
    CHECK(a.used == 50);
    CHECK(a.excluded == 0);

    const BootstrapResult b = bootstrap_od50(records, 50, 11, taus.size());
    CHECK(a.std_m == b.std_m);

    CHECK_THROWS_AS(bootstrap_od50(records, 1, 11, taus.size()), data_error);

    // All-high curves never cross: every replicate is excluded.
    std::vector<SceneMatchRecord> high;
    for (double d : {25.0, 50.0}) {
        for (int s = 0; s < 3; ++s) {
            SceneMatchRecord r;
            r.scene_id = "h_" + std::to_string(int(d)) + "_" + std::to_string(s);
            r.distance_m = d;
            r.n_gt = 1;
            r.scores = {0.9};
            r.tp.assign(taus.size(), {1});
            high.push_back(std::move(r));
        }
    }
    CHECK_THROWS_AS(bootstrap_od50(high, 10, 3, taus.size()), data_error);
}

TEST_CASE("bootstrap_od50: varied outcomes give a positive finite std") {
    const auto taus = default_iou_thresholds();
    Rng rng(5);
    std::vector<SceneMatchRecord> records;
    for (double d : {25.0, 50.0, 75.0, 100.0}) {
        for (int s = 0; s < 12; ++s) {
            SceneMatchRecord r;
            r.scene_id = "v" + std::to_string(int(d)) + "_" + std::to_string(s);
            r.distance_m = d;
            r.n_gt = 1;
            // Detection probability decays with distance.
            const bool hit = rng.uniform() < 1.2 - d / 120.0;
            if (hit) {
                r.scores = {0.5 + 0.5 * rng.uniform()};
                r.tp.assign(taus.size(), {1});
            } else {
                r.tp.assign(taus.size(), {});
            }
            records.push_back(std::move(r));
        }
    }
    const BootstrapResult res = bootstrap_od50(records, 200, 17, taus.size());
    CHECK(res.used + res.excluded == 200);
    CHECK(res.used >= 2);
    CHECK(res.std_m > 0.0);
    CHECK(std::isfinite(res.std_m));

    // Worker count does not change the outcome.
    const BootstrapResult res4 = bootstrap_od50(records, 200, 17, taus.size(), 4);
    CHECK(res4.std_m == res.std_m);
}

TEST_CASE("curve csv round trip") {
    ApCurve curve = curve_of({{25, 0.925}, {50, 0.5}, {75, 1.0 / 3.0}});
    curve.camera_id = "p1.4_f2.4";
    curve.condition = "day";
    const std::string path =
        (std::filesystem::temp_directory_path() / "camsim_curve.csv").string();
    save_curve_csv(curve, path);
    const auto curves = load_curves_csv(path);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].camera_id == curve.camera_id);
    CHECK(curves[0].condition == curve.condition);
    REQUIRE(curves[0].points.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(curves[0].points[i].distance_m == curve.points[i].distance_m);
        CHECK(curves[0].points[i].ap == curve.points[i].ap);
        CHECK(curves[0].points[i].n_scenes == curve.points[i].n_scenes);
    }
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 1, 1, 1}) == 0.0);
    const double rho = spearman_rho({1, 2, 3, 4, 5, 6}, {0.9, 0.8, 0.85, 0.6, 0.5, 0.3});
    CHECK(rho < -0.8);
}

}  // TEST_SUITE
