#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "camsim/detector.hpp"

using namespace camsim;

namespace {

RgbImage gray_image(int w, int h, uint8_t level) {
    RgbImage img;
    img.width = w;
    img.height = h;
    img.rgb.assign(size_t(w) * h * 3, level);
    return img;
}

void fill_rect(RgbImage& img, int x, int y, int w, int h, uint8_t level) {
    for (int r = y; r < y + h; ++r)
        for (int c = x; c < x + w; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.rgb[(size_t(r) * img.width + c) * 3 + ch] = level;
}

double box_iou(const Detection& d, double x, double y, double w, double h) {
    const double ix = std::max(d.x, x), iy = std::max(d.y, y);
    const double ix2 = std::min(d.x + d.w, x + w), iy2 = std::min(d.y + d.h, y + h);
    const double inter = std::max(0.0, ix2 - ix) * std::max(0.0, iy2 - iy);
    return inter / (d.w * d.h + w * h - inter);
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

SceneManifest tiny_manifest() {
    SceneManifest m;
    m.name = "t";
    ManifestEntry e;
    e.spec.scene_id = "s1";
    e.spec.distance_m = 50;
    m.scenes.push_back(e);
    e.spec.scene_id = "s2";
    m.scenes.push_back(e);
    return m;
}

}  // namespace

TEST_SUITE("detector") {

TEST_CASE("constant image yields no detections") {
    const RgbImage img = gray_image(64, 48, 120);
    CHECK(baseline_detect(img).empty());
}

TEST_CASE("one dark rectangle on a brighter road band") {
    RgbImage img = gray_image(96, 64, 150);
    fill_rect(img, 30, 24, 20, 16, 60);
    const auto dets = baseline_detect(img);
    REQUIRE(dets.size() == 1);
    CHECK(box_iou(dets[0], 30, 24, 20, 16) >= 0.5);
    CHECK(dets[0].score > 0.0);
    CHECK(dets[0].score <= 1.0);
}

TEST_CASE("two separated rectangles yield two detections") {
    RgbImage img = gray_image(128, 64, 150);
    fill_rect(img, 16, 20, 20, 16, 60);
    fill_rect(img, 80, 28, 20, 16, 60);  // 44 px apart horizontally
    const auto dets = baseline_detect(img);
    CHECK(dets.size() == 2);
}

TEST_CASE("translation covariance away from borders") {
    BaselineDetectorParams params;
    auto detect_box = [&](int dx, int dy) {
        RgbImage img = gray_image(128, 96, 150);
        fill_rect(img, 40 + dx, 30 + dy, 22, 14, 70);
        const auto dets = baseline_detect(img, params);
        REQUIRE(dets.size() == 1);
        return std::pair<double, double>(dets[0].x, dets[0].y);
    };
    const auto base = detect_box(0, 0);
    for (const auto& [dx, dy] : {std::pair<int, int>{3, 0}, {0, 5}, {7, 4}}) {
        const auto moved = detect_box(dx, dy);
        CHECK(moved.first - base.first == doctest::Approx(dx));
        CHECK(moved.second - base.second == doctest::Approx(dy));
    }
}

TEST_CASE("detection count is invariant to positive affine luma changes") {
    RgbImage img = gray_image(96, 64, 140);
    fill_rect(img, 30, 20, 18, 12, 60);
    const size_t base_count = baseline_detect(img).size();
    REQUIRE(base_count == 1);

    RgbImage scaled = img;
    for (auto& v : scaled.rgb) v = uint8_t(std::min(255.0, 40.0 + 1.4 * v));
    CHECK(baseline_detect(scaled).size() == base_count);
}

TEST_CASE("min_area filters specks") {
    RgbImage img = gray_image(64, 64, 150);
    fill_rect(img, 30, 30, 2, 2, 60);  // 4 px < default min_area 9
    CHECK(baseline_detect(img).empty());

    BaselineDetectorParams params;
    params.min_area_px = 1;
    params.smooth_radius = 0;
    CHECK(baseline_detect(img, params).size() == 1);
}

TEST_CASE("smooth_radius 0 matches the unsmoothed definition") {
    RgbImage img = gray_image(96, 64, 150);
    fill_rect(img, 30, 24, 20, 16, 60);
    BaselineDetectorParams params;
    params.smooth_radius = 0;
    const auto dets = baseline_detect(img, params);
    REQUIRE(dets.size() == 1);
    // Noise-free fixture: the unsmoothed box is exactly the rectangle.
    CHECK(dets[0].x == 30);
    CHECK(dets[0].y == 24);
    CHECK(dets[0].w == 20);
    CHECK(dets[0].h == 16);
}

TEST_CASE("detection json: save/load round trip") {
    DetectionSet set;
    set.detector_name = "baseline";
    set.detections.push_back({"s1", 10.5, 20.25, 30.0, 40.0, 0.75, "car"});
    set.detections.push_back({"s2", 1, 2, 3, 4, 1.0, "car"});
    const std::string path = temp_file("camsim_dets.json");
    save_detections(set, path);

    const SceneManifest manifest = tiny_manifest();
    const DetectionSet back = load_detections(path, manifest);
    CHECK(back.detector_name == set.detector_name);
    REQUIRE(back.detections.size() == 2);
    CHECK(back.detections[0].image_id == "s1");
    CHECK(back.detections[0].x == 10.5);
    CHECK(back.detections[0].score == 0.75);
    CHECK(back.warnings.empty());
}

TEST_CASE("detection json: empty list is valid") {
    DetectionSet set;
    set.detector_name = "none";
    const std::string path = temp_file("camsim_dets_empty.json");
    save_detections(set, path);
    const DetectionSet back = load_detections(path, tiny_manifest());
    CHECK(back.detections.empty());
}

TEST_CASE("detection json: unknown image id is rejected by name") {
    const std::string path = temp_file("camsim_dets_unknown.json");
    std::ofstream(path) << R"({"detector":"x","detections":[
        {"image_id":"nope","bbox":[1,2,3,4],"score":0.5,"category":"car"}]})";
    try {
        load_detections(path, tiny_manifest());
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
}

TEST_CASE("detection json: score slightly above 1 clamps with warning") {
    const std::string path = temp_file("camsim_dets_clamp.json");
    std::ofstream(path) << R"({"detector":"x","detections":[
        {"image_id":"s1","bbox":[1,2,3,4],"score":1.0000005,"category":"car"}]})";
    const DetectionSet set = load_detections(path, tiny_manifest());
    CHECK(set.detections[0].score == 1.0);
    CHECK(set.warnings.size() == 1);
}

TEST_CASE("detection json: bad boxes and scores are rejected") {
    const std::string path = temp_file("camsim_dets_bad.json");
    std::ofstream(path) << R"({"detector":"x","detections":[
        {"image_id":"s1","bbox":[1,2,-3,4],"score":0.5,"category":"car"}]})";
    CHECK_THROWS_AS(load_detections(path, tiny_manifest()), data_error);
    std::ofstream(path, std::ios::trunc) << R"({"detector":"x","detections":[
        {"image_id":"s1","bbox":[1,2,3,4],"score":1.5,"category":"car"}]})";
    CHECK_THROWS_AS(load_detections(path, tiny_manifest()), data_error);
    std::ofstream(path, std::ios::trunc) << "{not json";
    CHECK_THROWS_AS(load_detections(path, tiny_manifest()), format_error);
}

}  // TEST_SUITE
