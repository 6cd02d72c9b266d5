#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "camsim/scene.hpp"
#include "camsim/sif.hpp"

using namespace camsim;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

SceneSpec basic_spec(double distance, Illumination ill = Illumination::Day) {
    SceneSpec spec;
    spec.scene_id = "test";
    spec.distance_m = distance;
    spec.illumination = ill;
    spec.target_lux = ill == Illumination::Night ? 0.5 : 100.0;
    spec.car_index = 3;
    spec.lateral_offset_m = 0.2;
    spec.seed = 11;
    return spec;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("project_extent: formula, halving, and limit") {
    CHECK(project_extent(1.8, 50.0, 6.0) == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(project_extent(1.8, 100.0, 6.0) == doctest::Approx(0.108).epsilon(1e-12));
    CHECK(project_extent(1.8, 1e9, 6.0) < 1e-8);
    CHECK_THROWS_AS(project_extent(1.8, 0.0, 6.0), data_error);
    CHECK_THROWS_AS(project_extent(1.8, -5.0, 6.0), data_error);
    CHECK_THROWS_AS(project_extent(1.8, 0.004, 6.0), data_error);
}

TEST_CASE("ground_truth_bbox: projected size and pixel rounding") {
    RenderConfig cfg;
    SceneSpec spec = basic_spec(50.0);
    // Variant with a known size so the projected box is checkable by hand.
    const auto& variant = car_variants()[size_t(spec.car_index)];
    const double w_mm = project_extent(variant.width_m, 50.0, 6.0);
    const double h_mm = project_extent(variant.height_m, 50.0, 6.0);

    const GroundTruthBox box = ground_truth_bbox(spec, cfg, 1.4);
    CHECK(box.mm.w == doctest::Approx(w_mm).epsilon(1e-12));
    CHECK(box.mm.h == doctest::Approx(h_mm).epsilon(1e-12));
    // Outward rounding: at most one pixel slack per side.
    CHECK(box.w >= int(std::floor(w_mm / 0.0014)));
    CHECK(box.w <= int(std::ceil(w_mm / 0.0014)) + 1);
    CHECK(box.h >= int(std::floor(h_mm / 0.0014)));
    CHECK(box.h <= int(std::ceil(h_mm / 0.0014)) + 1);

    // A 1.8 x 1.5 m car at 50 m with f = 6 mm: 0.216 x 0.18 mm, about
    // 154 x 129 pixels of 1.4 um.
    CHECK(0.216 / 0.0014 == doctest::Approx(154.29).epsilon(1e-3));

    // Halving the pixel size doubles the box (before rounding).
    const GroundTruthBox fine = ground_truth_bbox(spec, cfg, 0.7);
    CHECK(std::abs(fine.w - 2 * box.w) <= 2);
    CHECK(std::abs(fine.h - 2 * box.h) <= 2);
}

TEST_CASE("ground_truth_bbox: centered when offset is zero") {
    RenderConfig cfg;
    SceneSpec spec = basic_spec(50.0);
    spec.lateral_offset_m = 0.0;
    const GroundTruthBox box = ground_truth_bbox(spec, cfg, 1.4);
    const SceneLayout layout = build_scene_layout(spec, cfg);
    const double window_center = layout.window_w / 2.0;
    const double box_center = box.mm.x + box.mm.w / 2.0;
    // Window snapping places the box center within one reference pixel of
    // the window center.
    CHECK(std::fabs(box_center - window_center) <= 2 * cfg.ref_pixel_pitch_mm());
}

TEST_CASE("ground_truth_bbox: box area shrinks as 1/d^2 before rounding") {
    RenderConfig cfg;
    const SceneSpec near = basic_spec(25.0);
    const SceneSpec far = basic_spec(100.0);
    const GroundTruthBox a = ground_truth_bbox(near, cfg, 1.4);
    const GroundTruthBox b = ground_truth_bbox(far, cfg, 1.4);
    const double ratio = (a.mm.w * a.mm.h) / (b.mm.w * b.mm.h);
    CHECK(ratio == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("field-of-view violation raises") {
    RenderConfig cfg;
    SceneSpec spec = basic_spec(25.0);
    spec.lateral_offset_m = 20.0;  // far outside the die at 25 m
    CHECK_THROWS_AS(build_scene_layout(spec, cfg), data_error);
}

TEST_CASE("generate_scene: deterministic bytes, target illuminance, nonnegative") {
    RenderConfig cfg;
    const SceneSpec spec = basic_spec(100.0);
    const SceneRender a = generate_scene(spec, cfg);
    const SceneRender b = generate_scene(spec, cfg);
    CHECK(a.radiance.values == b.radiance.values);

    a.radiance.validate();
    CHECK(scene_mean_illuminance(a.radiance) ==
          doctest::Approx(spec.target_lux).epsilon(1e-6));

    // Sky above, road below: top row is brighter than the bottom row for a
    // day scene with bright sky.
    const SpectralImage& img = a.radiance;
    double top = 0, bottom = 0;
    for (int c = 0; c < img.width; ++c) {
        top += pixel_luminance(img, 0, c);
        bottom += pixel_luminance(img, img.height - 1, c);
    }
    CHECK(top > bottom);
}

TEST_CASE("generate_scene: night headlights dominate the body by 1000x") {
    RenderConfig cfg;
    const SceneSpec spec = basic_spec(50.0, Illumination::Night);
    const SceneRender render = generate_scene(spec, cfg);
    const SceneLayout& layout = render.layout;
    REQUIRE(layout.emissive_rects.size() == 2);

    const double pitch = render.radiance.sample_pitch_mm;
    auto lum_at_mm = [&](double x_mm, double y_mm) {
        const int col = int((x_mm - layout.window_x) / pitch);
        const int row = int((y_mm - layout.window_y) / pitch);
        return pixel_luminance(render.radiance, row, col);
    };
    const auto& hl = layout.emissive_rects[0];
    const double lamp = lum_at_mm(hl.x + hl.w / 2.0, hl.y + hl.h / 2.0);
    // Body sample: car rect center, away from the lamps.
    const double body = lum_at_mm(layout.car_rect.x + layout.car_rect.w / 2.0,
                                  layout.car_rect.y + layout.car_rect.h * 0.2);
    CHECK(lamp / body > 1e3);

    // Night ambient target excludes the lamps: remove them and the mean
    // illuminance is the ambient target.
    const SpectralImage ambient = rasterize_scene(layout, cfg.ref_pixel_pitch_mm(),
                                                  cfg.supersample, false);
    CHECK(scene_mean_illuminance(ambient) == doctest::Approx(spec.target_lux).epsilon(1e-6));
}

TEST_CASE("generate_slanted_edge: contrast, slope, determinism") {
    RenderConfig cfg;
    cfg.edge_window_px = 32;
    const SpectralImage a = generate_slanted_edge(cfg);
    const SpectralImage b = generate_slanted_edge(cfg);
    CHECK(a.values == b.values);

    // Bright left third vs dark right third.
    double left = 0, right = 0;
    for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width / 3; ++c) left += pixel_luminance(a, r, c);
        for (int c = 2 * a.width / 3; c < a.width; ++c) right += pixel_luminance(a, r, c);
    }
    CHECK(left > 5.0 * right);

    // The edge crossing column moves linearly with row at tan(5 deg).
    auto crossing = [&](int row) {
        const float* band = a.band(a.n_wave / 2) + size_t(row) * a.width;
        const float hi = band[0], lo = band[a.width - 1];
        const float mid_level = 0.5f * (hi + lo);
        for (int c = 1; c < a.width; ++c)
            if (band[c] < mid_level) return double(c);
        return double(a.width);
    };
    const double slope = (crossing(a.height - 1) - crossing(0)) / double(a.height - 1);
    CHECK(slope == doctest::Approx(std::tan(5.0 * M_PI / 180.0)).epsilon(0.05));
}

TEST_CASE("generate_collection: counts, determinism, seed sensitivity") {
    RenderConfig cfg;
    CollectionOptions opts;
    opts.scenes_per_distance = 3;
    opts.write_scenes = false;

    const std::string dir_a = temp_dir("camsim_coll_a");
    const std::string dir_b = temp_dir("camsim_coll_b");
    const std::string dir_c = temp_dir("camsim_coll_c");

    const SceneManifest a = generate_collection("c", 5, cfg, opts, dir_a);
    CHECK(a.scenes.size() == 6 * 3);
    for (double d : {25.0, 50.0, 75.0, 100.0, 150.0, 200.0}) {
        int count = 0;
        for (const auto& e : a.scenes) count += e.spec.distance_m == d;
        CHECK(count == 3);
    }

    const SceneManifest b = generate_collection("c", 5, cfg, opts, dir_b);
    CHECK(file_bytes(dir_a + "/manifest.json") == file_bytes(dir_b + "/manifest.json"));

    const SceneManifest c = generate_collection("c", 6, cfg, opts, dir_c);
    bool car_differs = false;
    for (size_t i = 0; i < a.scenes.size(); ++i)
        car_differs |= a.scenes[i].spec.car_index != c.scenes[i].spec.car_index;
    CHECK(car_differs);

    // Day lux targets within [10, 200].
    for (const auto& e : a.scenes) {
        CHECK(e.spec.target_lux >= cfg.day_lux_min);
        CHECK(e.spec.target_lux <= cfg.day_lux_max);
    }
}

TEST_CASE("day and night collections share geometry") {
    RenderConfig cfg;
    CollectionOptions day_opts, night_opts;
    day_opts.scenes_per_distance = night_opts.scenes_per_distance = 2;
    day_opts.write_scenes = night_opts.write_scenes = false;
    night_opts.illumination = Illumination::Night;

    const SceneManifest day =
        generate_collection("c", 9, cfg, day_opts, temp_dir("camsim_coll_day"));
    const SceneManifest night =
        generate_collection("c", 9, cfg, night_opts, temp_dir("camsim_coll_night"));
    REQUIRE(day.scenes.size() == night.scenes.size());
    for (size_t i = 0; i < day.scenes.size(); ++i) {
        CHECK(day.scenes[i].spec.car_index == night.scenes[i].spec.car_index);
        CHECK(day.scenes[i].spec.lateral_offset_m == night.scenes[i].spec.lateral_offset_m);
        CHECK(day.scenes[i].spec.distance_m == night.scenes[i].spec.distance_m);
        CHECK(day.scenes[i].gt_box_mm.x == night.scenes[i].gt_box_mm.x);
        CHECK(day.scenes[i].spec.target_lux > night.scenes[i].spec.target_lux);
        CHECK(night.scenes[i].spec.target_lux >= cfg.night_lux_min);
        CHECK(night.scenes[i].spec.target_lux <= cfg.night_lux_max);
    }
}

TEST_CASE("collection with scene files round-trips through the manifest") {
    RenderConfig cfg;
    CollectionOptions opts;
    opts.distances_m = {100.0, 200.0};
    opts.scenes_per_distance = 1;
    opts.write_scenes = true;
    opts.store_supersample = 1;

    const std::string dir = temp_dir("camsim_coll_files");
    const SceneManifest manifest = generate_collection("files", 3, cfg, opts, dir);
    const SceneManifest loaded = load_manifest(dir + "/manifest.json");
    REQUIRE(loaded.scenes.size() == manifest.scenes.size());
    CHECK(loaded.name == manifest.name);
    CHECK(loaded.seed == manifest.seed);
    for (size_t i = 0; i < manifest.scenes.size(); ++i) {
        CHECK(loaded.scenes[i].spec.scene_id == manifest.scenes[i].spec.scene_id);
        CHECK(loaded.scenes[i].spec.target_lux == manifest.scenes[i].spec.target_lux);
        CHECK(loaded.scenes[i].gt_box_mm.w == manifest.scenes[i].gt_box_mm.w);
        const SpectralImage img = read_sif(dir + "/" + loaded.scenes[i].sif_path);
        img.validate();
        // Stored at the reference pixel pitch.
        CHECK(img.sample_pitch_mm == doctest::Approx(cfg.ref_pixel_pitch_mm()));
    }
}

}  // TEST_SUITE
