#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "camsim/spectral.hpp"

namespace camsim {

enum class Illumination { Day, Night, ExplicitLux };

std::string to_string(Illumination il);
Illumination illumination_from_string(const std::string& s);

/// One metric scene: a single car on a road at a fixed distance.
struct SceneSpec {
    std::string scene_id;
    double distance_m = 50.0;
    Illumination illumination = Illumination::Day;
    double target_lux = 100.0;  // ambient mean illuminance target
    int car_index = 0;
    double lateral_offset_m = 0.0;
    uint64_t seed = 0;
};

/// Camera-independent field-of-view assumption shared by a collection.
struct FieldOfView {
    double focal_length_mm = 6.0;
    double die_w_mm = 5.64;
    double die_h_mm = 4.23;
    double camera_height_m = 1.5;
};

/// Scene synthesis parameters. The reference pixel size fixes the grid the
/// render window snaps to and the pitch of stored scene files; cameras with
/// other pixel sizes re-rasterize the same layout at their own pitch.
struct RenderConfig {
    FieldOfView fov;
    double wave_start_nm = 400.0;
    double wave_step_nm = 10.0;
    int n_wave = 31;
    double ref_pixel_um = 1.4;
    int supersample = 8;
    // Render window dimensions as a multiple of the car box; full_frame
    // renders the whole die instead.
    double margin_factor = 2.4;
    bool full_frame = false;

    double sky_reflectance = 1.0;
    double road_reflectance = 0.20;
    double night_ambient_cct_k = 3000.0;
    double headlight_cct_k = 3200.0;
    double headlight_luminance_cd_m2 = 2.0e4;
    double headlight_size_m = 0.15;
    double headlight_height_m = 0.65;
    double day_lux_min = 10.0, day_lux_max = 200.0;
    double night_lux_min = 0.1, night_lux_max = 1.0;
    double lateral_offset_range_m = 0.5;

    int edge_window_px = 96;
    double edge_angle_deg = 5.0;
    double edge_bright_reflectance = 0.9;
    double edge_dark_reflectance = 0.05;
    double edge_lux = 100.0;

    double ref_pixel_pitch_mm() const { return ref_pixel_um * 1e-3; }
};

struct CarVariant {
    const char* name;
    double width_m;
    double height_m;
};
const std::array<CarVariant, 10>& car_variants();
Spd car_reflectance(int car_index, double start_nm, double step_nm, int n);

/// Axis-aligned box, top-left origin.
struct BoxMm {
    double x = 0, y = 0, w = 0, h = 0;
};
struct GroundTruthBox {
    BoxMm mm;         // window coordinates, mm on the sensor plane
    int x = 0, y = 0; // pixels, outward-rounded
    int w = 0, h = 0;
};

/// size_m · focal_length / distance, the pinhole image extent in mm.
double project_extent(double size_m, double distance_m, double focal_length_mm);

/// Fully resolved scene geometry plus the spectral content of each layer.
/// Coordinates are mm on the sensor plane with origin at the die top-left;
/// the render window is a sub-rectangle snapped to the reference pixel grid.
struct SceneLayout {
    double window_x = 0, window_y = 0, window_w = 0, window_h = 0;
    double horizon_y = 0;       // die coords; sky above, road below
    BoxMm car_rect;             // die coords
    std::vector<BoxMm> emissive_rects;  // die coords (headlights)

    Spd sky, road, car;         // relative ambient radiance (illuminant x reflectance)
    Spd emissive;               // absolute radiance of emissive patches
    double target_lux = 0;

    double wave_start_nm = 400, wave_step_nm = 10;
    int n_wave = 31;
};

SceneLayout build_scene_layout(const SceneSpec& spec, const RenderConfig& cfg);

/// Layer ids shared by the rasterizer and the fused renderer.
enum SceneLayerId : uint8_t { kLayerSky = 0, kLayerRoad = 1, kLayerCar = 2, kLayerEmissive = 3 };

/// Layer id per sample center at the given pitch (window origin, row-major).
Plane<uint8_t> scene_index_map(const SceneLayout& layout, double sample_pitch_mm, int width,
                               int height, bool include_emissive);

/// The single scalar applied to the ambient layers so the mean illuminance
/// over the given index map (emissive samples counted as car body) equals
/// the layout's target.
double scene_ambient_scale(const SceneLayout& layout, const Plane<uint8_t>& index_map);

/// Rasterizes a layout at pixel_pitch_mm / supersample. The ambient layers
/// are scaled by a single factor so the mean illuminance over the rendered
/// grid (emissive patches replaced by the layer beneath them) equals
/// target_lux; emissive patches keep their absolute radiance.
SpectralImage rasterize_scene(const SceneLayout& layout, double pixel_pitch_mm,
                              int supersample, bool include_emissive = true);

GroundTruthBox ground_truth_bbox(const SceneSpec& spec, const RenderConfig& cfg,
                                 double pixel_um);

struct SceneRender {
    SpectralImage radiance;
    GroundTruthBox gt;
    SceneLayout layout;
};
/// Renders at the reference pixel pitch and configured supersampling.
SceneRender generate_scene(const SceneSpec& spec, const RenderConfig& cfg);

/// High-contrast edge slanted a few degrees from vertical, for MTF work.
SpectralImage generate_slanted_edge(const RenderConfig& cfg);
SpectralImage generate_slanted_edge(const RenderConfig& cfg, double pixel_pitch_mm,
                                    int supersample);

struct ManifestEntry {
    SceneSpec spec;
    BoxMm gt_box_mm;
    std::string sif_path;  // relative to the manifest directory; may be empty
};

struct SceneManifest {
    std::string name;
    RenderConfig render;
    uint64_t seed = 0;
    int scenes_per_distance = 0;
    std::vector<double> distances_m;
    std::vector<ManifestEntry> scenes;

    const ManifestEntry* find(const std::string& scene_id) const;
};

struct CollectionOptions {
    std::vector<double> distances_m = {25, 50, 75, 100, 150, 200};
    int scenes_per_distance = 50;
    Illumination illumination = Illumination::Day;
    double explicit_lux = 100.0;   // used when illumination == ExplicitLux
    bool write_scenes = true;
    int store_supersample = 1;     // pitch of stored .sif files: ref_pixel / this
};

/// Generates the metric-scene collection: scenes_per_distance scenes at each
/// distance, car variants assigned by a seeded per-distance shuffle, lux
/// targets drawn per scene. Writes manifest.json (and scene .sif files when
/// requested) under out_dir.
SceneManifest generate_collection(const std::string& name, uint64_t seed,
                                  const RenderConfig& cfg, const CollectionOptions& opts,
                                  const std::string& out_dir, int workers = 1);

void save_manifest(const SceneManifest& manifest, const std::string& path);
SceneManifest load_manifest(const std::string& path);

}  // namespace camsim
