#include "camsim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "camsim/sif.hpp"

namespace camsim {

namespace fs = std::filesystem;

std::string to_string(Illumination il) {
    switch (il) {
        case Illumination::Day: return "day";
        case Illumination::Night: return "night";
        case Illumination::ExplicitLux: return "lux";
    }
    return "day";
}

Illumination illumination_from_string(const std::string& s) {
    if (s == "day") return Illumination::Day;
    if (s == "night") return Illumination::Night;
    if (s == "lux") return Illumination::ExplicitLux;
    throw format_error("unknown illumination: " + s);
}

const std::array<CarVariant, 10>& car_variants() {
    static const std::array<CarVariant, 10> table = {{
        {"gray08", 1.60, 1.30},
        {"gray50", 1.95, 1.55},
        {"gray13", 1.70, 1.40},
        {"gray40", 1.85, 1.45},
        {"gray17", 1.75, 1.35},
        {"gray31", 1.90, 1.60},
        {"gray24", 1.65, 1.42},
        {"gray10", 2.00, 1.50},
        {"red", 1.80, 1.50},
        {"blue", 1.72, 1.38},
    }};
    return table;
}

Spd car_reflectance(int car_index, double start_nm, double step_nm, int n) {
    static const std::array<double, 8> gray_levels = {0.08, 0.50, 0.13, 0.40,
                                                      0.17, 0.31, 0.24, 0.10};
    if (car_index < 0 || car_index >= int(car_variants().size()))
        throw data_error("car_index out of range");
    if (car_index < 8) return flat_spd(gray_levels[car_index], start_nm, step_nm, n);

    Spd out = flat_spd(0.0, start_nm, step_nm, n);
    for (int i = 0; i < n; ++i) {
        const double nm = out.wavelengths_nm[i];
        if (car_index == 8) {
            // Red body: dark below 580 nm, ramps to 0.55 above 620 nm.
            if (nm <= 580) out.power[i] = 0.07;
            else if (nm >= 620) out.power[i] = 0.55;
            else out.power[i] = 0.07 + (0.55 - 0.07) * (nm - 580) / 40.0;
        } else {
            // Blue body: bright at short wavelengths, dark above 560 nm.
            if (nm <= 480) out.power[i] = 0.45;
            else if (nm >= 560) out.power[i] = 0.05;
            else out.power[i] = 0.45 + (0.05 - 0.45) * (nm - 480) / 80.0;
        }
    }
    return out;
}

double project_extent(double size_m, double distance_m, double focal_length_mm) {
    if (!(distance_m > 0.0)) throw data_error("project_extent: distance must be positive");
    if (!(distance_m * 1000.0 > focal_length_mm))
        throw data_error("project_extent: distance must exceed the focal length");
    return size_m * focal_length_mm / distance_m;
}

namespace {

Spd multiply(const Spd& a, const Spd& b) {
    Spd out = a;
    for (size_t i = 0; i < out.power.size(); ++i) out.power[i] *= b.power[i];
    return out;
}

Spd scaled(Spd a, double k) {
    for (auto& p : a.power) p *= k;
    return a;
}

}  // namespace

SceneLayout build_scene_layout(const SceneSpec& spec, const RenderConfig& cfg) {
    const auto& fov = cfg.fov;
    const auto& variant = car_variants().at(size_t(spec.car_index));

    const double s = cfg.fov.focal_length_mm / spec.distance_m;  // mm per m
    const double car_w = project_extent(variant.width_m, spec.distance_m, fov.focal_length_mm);
    const double car_h = project_extent(variant.height_m, spec.distance_m, fov.focal_length_mm);

    // Die coordinates: origin top-left, principal point at the center,
    // horizon on the center row (level camera).
    const double cx = fov.die_w_mm / 2.0 + spec.lateral_offset_m * s;
    const double horizon_y = fov.die_h_mm / 2.0;
    const double car_bottom = horizon_y + fov.camera_height_m * s;
    const double car_top = car_bottom - car_h;

    SceneLayout out;
    out.horizon_y = horizon_y;
    out.car_rect = {cx - car_w / 2.0, car_top, car_w, car_h};

    if (out.car_rect.x < 0 || out.car_rect.y < 0 ||
        out.car_rect.x + out.car_rect.w > fov.die_w_mm ||
        out.car_rect.y + out.car_rect.h > fov.die_h_mm) {
        throw data_error("scene '" + spec.scene_id + "': projected car leaves the field of view");
    }

    if (cfg.full_frame) {
        out.window_x = 0;
        out.window_y = 0;
        out.window_w = fov.die_w_mm;
        out.window_h = fov.die_h_mm;
    } else {
        const double pitch = cfg.ref_pixel_pitch_mm();
        const double win_w = cfg.margin_factor * car_w;
        const double win_h = cfg.margin_factor * car_h;
        double x0 = std::floor((cx - win_w / 2.0) / pitch) * pitch;
        double y0 = std::floor((car_top + car_h / 2.0 - win_h / 2.0) / pitch) * pitch;
        double x1 = x0 + std::ceil(win_w / pitch) * pitch;
        double y1 = y0 + std::ceil(win_h / pitch) * pitch;
        x0 = std::max(0.0, x0);
        y0 = std::max(0.0, y0);
        x1 = std::min(fov.die_w_mm, x1);
        y1 = std::min(fov.die_h_mm, y1);
        out.window_x = x0;
        out.window_y = y0;
        out.window_w = x1 - x0;
        out.window_h = y1 - y0;
    }

    out.wave_start_nm = cfg.wave_start_nm;
    out.wave_step_nm = cfg.wave_step_nm;
    out.n_wave = cfg.n_wave;
    out.target_lux = spec.target_lux;

    const Spd ambient =
        spec.illumination == Illumination::Night
            ? blackbody_spd(cfg.night_ambient_cct_k, cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave)
            : d65_spd(cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave);
    const Spd body = car_reflectance(spec.car_index, cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave);

    out.sky = scaled(ambient, cfg.sky_reflectance);
    out.road = scaled(ambient, cfg.road_reflectance);
    out.car = multiply(ambient, body);

    if (spec.illumination == Illumination::Night) {
        // Two emissive headlight patches on the car front, held at a fixed
        // absolute luminance and excluded from the ambient scaling.
        const double hl = cfg.headlight_size_m * s;
        const double hy = horizon_y + (fov.camera_height_m - cfg.headlight_height_m) * s - hl / 2.0;
        for (const double side : {-1.0, 1.0}) {
            const double hx = cx + side * 0.3 * variant.width_m * s - hl / 2.0;
            BoxMm rect{hx, hy, hl, hl};
            rect.x = std::max(rect.x, out.car_rect.x);
            rect.y = std::max(rect.y, out.car_rect.y);
            out.emissive_rects.push_back(rect);
        }
        Spd lamp = blackbody_spd(cfg.headlight_cct_k, cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave);
        const double lum = luminance(lamp);
        out.emissive = scaled(lamp, cfg.headlight_luminance_cd_m2 / lum);
    }
    return out;
}

// Layer index per sample center; emissive wins over car wins over sky/road.
Plane<uint8_t> scene_index_map(const SceneLayout& layout, double sample_pitch_mm, int width,
                               int height, bool include_emissive) {
    Plane<uint8_t> map(width, height);
    auto inside = [](const BoxMm& r, double x, double y) {
        return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
    };
    for (int row = 0; row < height; ++row) {
        const double y = layout.window_y + (row + 0.5) * sample_pitch_mm;
        uint8_t* out = map.row(row);
        for (int col = 0; col < width; ++col) {
            const double x = layout.window_x + (col + 0.5) * sample_pitch_mm;
            uint8_t id = y < layout.horizon_y ? kLayerSky : kLayerRoad;
            if (inside(layout.car_rect, x, y)) {
                id = kLayerCar;
                if (include_emissive) {
                    for (const auto& r : layout.emissive_rects) {
                        if (inside(r, x, y)) {
                            id = kLayerEmissive;
                            break;
                        }
                    }
                }
            }
            out[col] = id;
        }
    }
    return map;
}

double scene_ambient_scale(const SceneLayout& layout, const Plane<uint8_t>& map) {
    std::array<size_t, 4> counts{};
    for (size_t i = 0; i < map.size(); ++i) ++counts[map.data()[i]];
    counts[kLayerCar] += counts[kLayerEmissive];

    const double mean_lum =
        (counts[kLayerSky] * luminance(layout.sky) + counts[kLayerRoad] * luminance(layout.road) +
         counts[kLayerCar] * luminance(layout.car)) /
        double(map.size());
    if (!(mean_lum > 0.0)) throw data_error("scene scaling: degenerate all-zero scene");
    return layout.target_lux / (M_PI * mean_lum);
}

SpectralImage rasterize_scene(const SceneLayout& layout, double pixel_pitch_mm,
                              int supersample, bool include_emissive) {
    if (!(pixel_pitch_mm > 0.0) || supersample < 1)
        throw data_error("rasterize_scene: invalid pitch or supersample");
    const double pitch = pixel_pitch_mm / supersample;
    const int px_w = std::max<int>(1, int(std::ceil(layout.window_w / pixel_pitch_mm - 1e-9)));
    const int px_h = std::max<int>(1, int(std::ceil(layout.window_h / pixel_pitch_mm - 1e-9)));
    const int width = px_w * supersample;
    const int height = px_h * supersample;

    const auto map = scene_index_map(layout, pitch, width, height, include_emissive);
    const double scale = scene_ambient_scale(layout, map);

    SpectralImage img(width, height, layout.wave_start_nm, layout.wave_step_nm,
                      layout.n_wave, pitch, RadiometricUnit::Radiance);
    for (int b = 0; b < layout.n_wave; ++b) {
        const float values[4] = {
            float(layout.sky.power[b] * scale),
            float(layout.road.power[b] * scale),
            float(layout.car.power[b] * scale),
            include_emissive && !layout.emissive.power.empty()
                ? float(layout.emissive.power[b])
                : float(layout.car.power[b] * scale),
        };
        float* out = img.band(b);
        const uint8_t* ids = map.data();
        for (size_t i = 0; i < map.size(); ++i) out[i] = values[ids[i]];
    }
    return img;
}

GroundTruthBox ground_truth_bbox(const SceneSpec& spec, const RenderConfig& cfg,
                                 double pixel_um) {
    const SceneLayout layout = build_scene_layout(spec, cfg);
    GroundTruthBox box;
    box.mm = {layout.car_rect.x - layout.window_x, layout.car_rect.y - layout.window_y,
              layout.car_rect.w, layout.car_rect.h};
    const double p = pixel_um * 1e-3;
    const int x0 = int(std::floor(box.mm.x / p));
    const int y0 = int(std::floor(box.mm.y / p));
    const int x1 = int(std::ceil((box.mm.x + box.mm.w) / p));
    const int y1 = int(std::ceil((box.mm.y + box.mm.h) / p));
    box.x = x0;
    box.y = y0;
    box.w = x1 - x0;
    box.h = y1 - y0;
    if (box.w <= 0 || box.h <= 0) throw data_error("ground_truth_bbox: degenerate box");
    return box;
}

SceneRender generate_scene(const SceneSpec& spec, const RenderConfig& cfg) {
    SceneRender out;
    out.layout = build_scene_layout(spec, cfg);
    out.radiance = rasterize_scene(out.layout, cfg.ref_pixel_pitch_mm(), cfg.supersample);
    out.gt = ground_truth_bbox(spec, cfg, cfg.ref_pixel_um);
    return out;
}

SpectralImage generate_slanted_edge(const RenderConfig& cfg) {
    return generate_slanted_edge(cfg, cfg.ref_pixel_pitch_mm(), cfg.supersample);
}

SpectralImage generate_slanted_edge(const RenderConfig& cfg, double pixel_pitch_mm,
                                    int supersample) {
    const int px = cfg.edge_window_px;
    const int n = px * supersample;
    const double pitch = pixel_pitch_mm / supersample;

    const Spd illum = d65_spd(cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave);
    Spd bright = scaled(illum, cfg.edge_bright_reflectance);
    Spd dark = scaled(illum, cfg.edge_dark_reflectance);

    // Bright on the left of an edge slanted edge_angle_deg from vertical,
    // passing through the window center.
    const double tan_a = std::tan(cfg.edge_angle_deg * M_PI / 180.0);
    const double c = n / 2.0;
    Plane<uint8_t> mask(n, n);
    size_t bright_count = 0;
    for (int row = 0; row < n; ++row) {
        const double edge_col = c + tan_a * ((row + 0.5) - c);
        uint8_t* out = mask.row(row);
        for (int col = 0; col < n; ++col) {
            const bool is_bright = (col + 0.5) < edge_col;
            out[col] = is_bright ? 1 : 0;
            bright_count += is_bright;
        }
    }

    const double mean_lum = (bright_count * luminance(bright) +
                             (mask.size() - bright_count) * luminance(dark)) /
                            double(mask.size());
    const double scale = cfg.edge_lux / (M_PI * mean_lum);

    SpectralImage img(n, n, cfg.wave_start_nm, cfg.wave_step_nm, cfg.n_wave, pitch,
                      RadiometricUnit::Radiance);
    for (int b = 0; b < cfg.n_wave; ++b) {
        const float vb = float(bright.power[b] * scale);
        const float vd = float(dark.power[b] * scale);
        float* out = img.band(b);
        const uint8_t* m = mask.data();
        for (size_t i = 0; i < mask.size(); ++i) out[i] = m[i] ? vb : vd;
    }
    return img;
}

const ManifestEntry* SceneManifest::find(const std::string& scene_id) const {
    for (const auto& e : scenes)
        if (e.spec.scene_id == scene_id) return &e;
    return nullptr;
}

namespace {

std::string scene_file_name(const SceneSpec& spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s.sif", spec.scene_id.c_str());
    return buf;
}

nlohmann::json render_config_to_json(const RenderConfig& cfg) {
    nlohmann::json j;
    j["focal_length_mm"] = cfg.fov.focal_length_mm;
    j["die_w_mm"] = cfg.fov.die_w_mm;
    j["die_h_mm"] = cfg.fov.die_h_mm;
    j["camera_height_m"] = cfg.fov.camera_height_m;
    j["wave_start_nm"] = cfg.wave_start_nm;
    j["wave_step_nm"] = cfg.wave_step_nm;
    j["n_wave"] = cfg.n_wave;
    j["ref_pixel_um"] = cfg.ref_pixel_um;
    j["supersample"] = cfg.supersample;
    j["margin_factor"] = cfg.margin_factor;
    j["full_frame"] = cfg.full_frame;
    j["sky_reflectance"] = cfg.sky_reflectance;
    j["road_reflectance"] = cfg.road_reflectance;
    j["night_ambient_cct_k"] = cfg.night_ambient_cct_k;
    j["headlight_cct_k"] = cfg.headlight_cct_k;
    j["headlight_luminance_cd_m2"] = cfg.headlight_luminance_cd_m2;
    j["headlight_size_m"] = cfg.headlight_size_m;
    j["headlight_height_m"] = cfg.headlight_height_m;
    return j;
}

RenderConfig render_config_from_json(const nlohmann::json& j) {
    RenderConfig cfg;
    cfg.fov.focal_length_mm = j.at("focal_length_mm").get<double>();
    cfg.fov.die_w_mm = j.at("die_w_mm").get<double>();
    cfg.fov.die_h_mm = j.at("die_h_mm").get<double>();
    cfg.fov.camera_height_m = j.at("camera_height_m").get<double>();
    cfg.wave_start_nm = j.at("wave_start_nm").get<double>();
    cfg.wave_step_nm = j.at("wave_step_nm").get<double>();
    cfg.n_wave = j.at("n_wave").get<int>();
    cfg.ref_pixel_um = j.at("ref_pixel_um").get<double>();
    cfg.supersample = j.at("supersample").get<int>();
    cfg.margin_factor = j.at("margin_factor").get<double>();
    cfg.full_frame = j.at("full_frame").get<bool>();
    cfg.sky_reflectance = j.at("sky_reflectance").get<double>();
    cfg.road_reflectance = j.at("road_reflectance").get<double>();
    cfg.night_ambient_cct_k = j.at("night_ambient_cct_k").get<double>();
    cfg.headlight_cct_k = j.at("headlight_cct_k").get<double>();
    cfg.headlight_luminance_cd_m2 = j.at("headlight_luminance_cd_m2").get<double>();
    cfg.headlight_size_m = j.at("headlight_size_m").get<double>();
    cfg.headlight_height_m = j.at("headlight_height_m").get<double>();
    return cfg;
}

}  // namespace

SceneManifest generate_collection(const std::string& name, uint64_t seed,
                                  const RenderConfig& cfg, const CollectionOptions& opts,
                                  const std::string& out_dir, int workers) {
    if (opts.scenes_per_distance < 1 || opts.distances_m.empty())
        throw config_error("generate_collection: empty collection");

    SceneManifest manifest;
    manifest.name = name;
    manifest.render = cfg;
    manifest.seed = seed;
    manifest.scenes_per_distance = opts.scenes_per_distance;
    manifest.distances_m = opts.distances_m;

    const int n_variants = int(car_variants().size());
    for (size_t di = 0; di < opts.distances_m.size(); ++di) {
        const double dist = opts.distances_m[di];

        // Seeded shuffle per distance; scenes cycle through it so small
        // collections still cover the variant table evenly.
        std::vector<int> order(n_variants);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(seed, hash_str("cars"), uint64_t(di)));
        for (int i = n_variants - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.below(uint64_t(i + 1))]);

        for (int i = 0; i < opts.scenes_per_distance; ++i) {
            const uint64_t scene_index = di * uint64_t(opts.scenes_per_distance) + i;
            SceneSpec spec;
            char id[64];
            std::snprintf(id, sizeof(id), "d%03d_s%03d", int(dist), i);
            spec.scene_id = id;
            spec.distance_m = dist;
            spec.illumination = opts.illumination;
            spec.car_index = order[i % n_variants];
            spec.seed = derive_seed(seed, hash_str("scene"), scene_index);

            Rng draw(derive_seed(seed, hash_str("draw"), scene_index));
            spec.lateral_offset_m =
                draw.uniform(-cfg.lateral_offset_range_m, cfg.lateral_offset_range_m);
            const double u = draw.uniform();
            switch (opts.illumination) {
                case Illumination::Day:
                    spec.target_lux = cfg.day_lux_min + (cfg.day_lux_max - cfg.day_lux_min) * u;
                    break;
                case Illumination::Night:
                    spec.target_lux =
                        cfg.night_lux_min + (cfg.night_lux_max - cfg.night_lux_min) * u;
                    break;
                case Illumination::ExplicitLux:
                    spec.target_lux = opts.explicit_lux;
                    break;
            }

            ManifestEntry entry;
            entry.spec = spec;
            const GroundTruthBox gt = ground_truth_bbox(spec, cfg, cfg.ref_pixel_um);
            entry.gt_box_mm = gt.mm;
            if (opts.write_scenes) entry.sif_path = scene_file_name(spec);
            manifest.scenes.push_back(std::move(entry));
        }
    }

    fs::create_directories(out_dir);
    if (opts.write_scenes) {
        parallel_for(int64_t(manifest.scenes.size()), workers, [&](int64_t i) {
            const auto& entry = manifest.scenes[size_t(i)];
            const SceneLayout layout = build_scene_layout(entry.spec, cfg);
            const SpectralImage img =
                rasterize_scene(layout, cfg.ref_pixel_pitch_mm(), opts.store_supersample);
            write_sif(img, (fs::path(out_dir) / entry.sif_path).string());
        });
    }
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

void save_manifest(const SceneManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["collection"] = manifest.name;
    j["seed"] = manifest.seed;
    j["scenes_per_distance"] = manifest.scenes_per_distance;
    j["distances_m"] = manifest.distances_m;
    j["render"] = render_config_to_json(manifest.render);
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& e : manifest.scenes) {
        nlohmann::json s;
        s["scene_id"] = e.spec.scene_id;
        s["distance_m"] = e.spec.distance_m;
        s["illumination"] = to_string(e.spec.illumination);
        s["target_lux"] = e.spec.target_lux;
        s["car_index"] = e.spec.car_index;
        s["lateral_offset_m"] = e.spec.lateral_offset_m;
        s["seed"] = e.spec.seed;
        s["sif_path"] = e.sif_path;
        s["gt_box_mm"] = {{"x", e.gt_box_mm.x},
                          {"y", e.gt_box_mm.y},
                          {"w", e.gt_box_mm.w},
                          {"h", e.gt_box_mm.h}};
        scenes.push_back(std::move(s));
    }
    j["scenes"] = std::move(scenes);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

SceneManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("manifest parse error: ") + e.what());
    }
    SceneManifest manifest;
    try {
        manifest.name = j.at("collection").get<std::string>();
        manifest.seed = j.at("seed").get<uint64_t>();
        manifest.scenes_per_distance = j.at("scenes_per_distance").get<int>();
        manifest.distances_m = j.at("distances_m").get<std::vector<double>>();
        manifest.render = render_config_from_json(j.at("render"));
        for (const auto& s : j.at("scenes")) {
            ManifestEntry e;
            e.spec.scene_id = s.at("scene_id").get<std::string>();
            e.spec.distance_m = s.at("distance_m").get<double>();
            e.spec.illumination = illumination_from_string(s.at("illumination").get<std::string>());
            e.spec.target_lux = s.at("target_lux").get<double>();
            e.spec.car_index = s.at("car_index").get<int>();
            e.spec.lateral_offset_m = s.at("lateral_offset_m").get<double>();
            e.spec.seed = s.at("seed").get<uint64_t>();
            e.sif_path = s.at("sif_path").get<std::string>();
            const auto& b = s.at("gt_box_mm");
            e.gt_box_mm = {b.at("x").get<double>(), b.at("y").get<double>(),
                           b.at("w").get<double>(), b.at("h").get<double>()};
            manifest.scenes.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("manifest field error: ") + e.what());
    }
    return manifest;
}

}  // namespace camsim
