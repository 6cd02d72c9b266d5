#pragma once

#include <string>
#include <vector>

#include "camsim/camera.hpp"
#include "camsim/detector.hpp"
#include "camsim/metrics.hpp"
#include "camsim/mtf.hpp"
#include "camsim/render_fast.hpp"
#include "camsim/spm.hpp"

namespace camsim {

struct Condition {
    Illumination illumination = Illumination::Day;
    double lux = 0.0;  // used for ExplicitLux

    std::string label() const;
    static Condition parse(const std::string& text);
    bool operator==(const Condition&) const = default;
};

struct DetectorChoice {
    enum class Kind { Baseline, External };
    Kind kind = Kind::Baseline;
    /// Directory of {camera_id}__{condition}.json files in the detection
    /// interchange schema.
    std::string external_dir;
    BaselineDetectorParams baseline;
};

struct ExperimentConfig {
    std::string name = "experiment";
    uint64_t seed = 1;
    RenderConfig render;
    std::vector<double> distances_m = {25, 50, 75, 100, 150, 200};
    int scenes_per_distance = 10;
    std::vector<CameraConfig> cameras;  // empty → default_camera_grid()
    std::vector<Condition> conditions = {{Illumination::Day, 0.0},
                                         {Illumination::Night, 0.0}};
    DetectorChoice detector;
    int bootstrap_replicates = 0;
    std::vector<double> contour_levels = {0.2, 0.35, 0.5, 0.65, 0.8};
    std::string out_dir = "out/experiment";
    int workers = 0;  // 0 → CAMSIM_WORKERS or hardware concurrency
    bool write_images = true;
    /// Per-camera supersampling chosen as the smallest factor (≥ 4) that
    /// resolves the diffraction cutoff; when false the render config's
    /// fixed factor is used everywhere.
    bool adaptive_supersampling = true;
    int mtf_window_px = 96;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_json(const ExperimentConfig& config);
uint64_t experiment_config_hash(const ExperimentConfig& config);

struct CameraConditionResult {
    std::string camera_id;
    std::string condition;
    ApCurve curve;
    Od50Result od50_result;
    double mtf50_cyc_per_mm = 0.0;
    double mean_saturated_fraction = 0.0;
};

struct ExperimentResult {
    std::string out_dir;
    std::vector<CameraConditionResult> results;
    std::vector<std::string> spm_files;
    int64_t tasks_run = 0;
    int64_t tasks_skipped = 0;

    const CameraConditionResult* find(const std::string& camera_id,
                                      const std::string& condition) const;
};

/// Runs the full pipeline for every camera × condition × scene: scene
/// synthesis, auto-exposure, capture, ISP, detection (or external
/// ingestion), AP curves, OD50 (+bootstrap), MTF50, and SPM assembly.
/// Deterministic for a fixed (config, seed) regardless of worker count;
/// completed tasks are skipped on rerun via the config hash.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace camsim
