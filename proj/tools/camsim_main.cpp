#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "camsim/pipeline.hpp"
#include "camsim/sif.hpp"

namespace fs = std::filesystem;
using namespace camsim;

namespace {

std::vector<double> parse_levels(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
    if (out.empty()) throw config_error("empty level list");
    return out;
}

int cmd_scenegen(const std::string& name, uint64_t seed, int scenes_per_distance,
                 const std::string& out, const std::string& condition, int store_supersample,
                 bool manifest_only, int workers) {
    RenderConfig render;
    CollectionOptions opts;
    opts.scenes_per_distance = scenes_per_distance;
    const Condition cond = Condition::parse(condition);
    opts.illumination = cond.illumination;
    opts.explicit_lux = cond.lux;
    opts.write_scenes = !manifest_only;
    opts.store_supersample = store_supersample;
    const SceneManifest manifest = generate_collection(name, seed, render, opts, out, workers);
    std::printf("collection '%s': %zu scenes (%d per distance) -> %s\n", name.c_str(),
                manifest.scenes.size(), scenes_per_distance, out.c_str());
    return 0;
}

int cmd_mtf(const std::string& camera_id, bool whole_grid, const std::string& csv_path,
            int window_px, int workers) {
    RenderConfig render;
    MtfOptions opts;
    opts.window_px = window_px;
    std::vector<CameraConfig> cams = default_camera_grid();
    if (!whole_grid) {
        auto it = std::find_if(cams.begin(), cams.end(),
                               [&](const CameraConfig& c) { return c.id == camera_id; });
        if (it == cams.end())
            throw config_error("unknown camera id '" + camera_id +
                               "' (default grid ids look like p1.4_f2.4)");
        cams = {*it};
    }
    std::vector<MtfResult> results(cams.size());
    parallel_for(int64_t(cams.size()), workers,
                 [&](int64_t i) { results[size_t(i)] = measure_mtf50(cams[size_t(i)], render, opts); });
    for (size_t i = 0; i < cams.size(); ++i) {
        std::printf("%-12s mtf50 = %8.2f cycles/mm%s (edge angle %.2f deg)\n",
                    cams[i].id.c_str(), results[i].mtf50_cyc_per_mm,
                    results[i].extrapolated ? " [extrapolated]" : "",
                    results[i].edge_angle_deg);
    }
    if (!csv_path.empty() && cams.size() == 1) save_mtf_csv(results[0], csv_path);
    return 0;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig config = load_experiment_config(config_path);
    const ExperimentResult result = run_experiment(config);
    std::printf("experiment -> %s (%lld tasks run, %lld skipped)\n", result.out_dir.c_str(),
                (long long)result.tasks_run, (long long)result.tasks_skipped);
    for (const auto& r : result.results) {
        std::printf("  %-12s %-8s mtf50=%7.1f od50=%7.1f m (%s)\n", r.camera_id.c_str(),
                    r.condition.c_str(), r.mtf50_cyc_per_mm, r.od50_result.od50_m,
                    to_string(r.od50_result.method).c_str());
    }
    return 0;
}

int cmd_sweep_lux(const std::string& levels_csv, const std::string& out, uint64_t seed,
                  int scenes_per_distance, const std::string& distances_csv, int workers,
                  int bootstrap) {
    ExperimentConfig config;
    config.name = "lux-sweep";
    config.seed = seed;
    config.out_dir = out;
    config.workers = workers;
    config.scenes_per_distance = scenes_per_distance;
    if (!distances_csv.empty()) config.distances_m = parse_levels(distances_csv);
    config.cameras = {make_camera(1.4, 2.4)};
    config.conditions.clear();
    for (double lux : parse_levels(levels_csv))
        config.conditions.push_back({Illumination::ExplicitLux, lux});
    config.bootstrap_replicates = bootstrap;
    const ExperimentResult result = run_experiment(config);
    std::printf("lux sweep -> %s\n", result.out_dir.c_str());
    for (const auto& r : result.results) {
        std::printf("  %-8s:", r.condition.c_str());
        for (const auto& p : r.curve.points) std::printf(" ap(%gm)=%.3f", p.distance_m, p.ap);
        std::printf("\n");
    }
    return 0;
}

int cmd_spm(const std::string& input_dir, const std::string& axis, const std::string& out_base,
            const std::string& levels_csv) {
    // Rebuild an SPM from an experiment directory's results.json.
    const fs::path results_path = fs::path(input_dir) / "results.json";
    std::ifstream in(results_path);
    if (!in) throw data_error("cannot open: " + results_path.string());
    nlohmann::json j;
    in >> j;

    std::map<std::string, std::vector<std::pair<double, ApCurve>>> grouped;
    for (const auto& e : j.at("results")) {
        ApCurve curve;
        curve.camera_id = e.at("camera_id").get<std::string>();
        curve.condition = e.at("condition").get<std::string>();
        for (const auto& p : e.at("curve"))
            curve.points.push_back({p.at("distance_m").get<double>(), p.at("ap").get<double>(),
                                    p.at("n_scenes").get<int>()});
        if (axis == "mtf50") {
            if (curve.condition.rfind("lux", 0) == 0) continue;
            grouped[curve.condition].push_back({e.at("mtf50_cyc_per_mm").get<double>(), curve});
        } else if (axis == "lux") {
            if (curve.condition.rfind("lux", 0) != 0) continue;
            grouped[curve.camera_id].push_back({std::stod(curve.condition.substr(3)), curve});
        } else {
            throw config_error("axis must be mtf50 or lux");
        }
    }
    if (grouped.empty()) throw data_error("no curves matching axis '" + axis + "' in results");

    const std::vector<double> levels =
        levels_csv.empty() ? std::vector<double>{0.2, 0.35, 0.5, 0.65, 0.8}
                           : parse_levels(levels_csv);
    for (auto& [key, curves] : grouped) {
        if (curves.size() < 2) {
            std::fprintf(stderr, "skipping '%s': needs at least 2 rows\n", key.c_str());
            continue;
        }
        std::sort(curves.begin(), curves.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        SpmOptions opts;
        opts.y_label = axis == "mtf50" ? "mtf50_cyc_per_mm" : "illuminance_lux";
        const SpmGrid grid = build_grid(curves, opts);
        const auto iso = contours(grid, levels);
        const std::string base = out_base + "_" + key;
        emit_csv(grid, base + ".csv");
        emit_svg(grid, iso, base + ".svg");
        std::printf("spm '%s' -> %s.csv / .svg\n", key.c_str(), base.c_str());
    }
    return 0;
}

int cmd_od50(const std::string& curve_path, int bootstrap, const std::string& records_path,
             uint64_t seed) {
    const auto curves = load_curves_csv(curve_path);
    if (curves.empty()) throw data_error("no curves in " + curve_path);
    for (const auto& curve : curves) {
        Od50Result r = od50(curve);
        std::printf("%s %s: od50 = %.2f m (%s)\n", curve.camera_id.c_str(),
                    curve.condition.c_str(), r.od50_m, to_string(r.method).c_str());
    }
    if (bootstrap >= 2) {
        if (records_path.empty())
            throw config_error("--bootstrap needs --records (match records json)");
        std::ifstream in(records_path);
        if (!in) throw data_error("cannot open: " + records_path);
        nlohmann::json j;
        in >> j;
        std::vector<SceneMatchRecord> records;
        const size_t n_thresholds = j.at("iou_thresholds").size();
        for (const auto& e : j.at("scenes")) {
            SceneMatchRecord r;
            r.scene_id = e.at("scene_id").get<std::string>();
            r.distance_m = e.at("distance_m").get<double>();
            r.n_gt = e.at("n_gt").get<int>();
            r.scores = e.at("scores").get<std::vector<double>>();
            for (const auto& row : e.at("tp")) r.tp.push_back(row.get<std::vector<uint8_t>>());
            records.push_back(std::move(r));
        }
        const BootstrapResult boot =
            bootstrap_od50(records, bootstrap, seed, n_thresholds, default_workers());
        std::printf("bootstrap: std = %.3f m over %d replicates (%d excluded)\n", boot.std_m,
                    boot.used, boot.excluded);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camsim: camera system simulation and detection-metric toolkit"};
    app.require_subcommand(1);

    // scenegen
    std::string sg_name = "metric-scenes", sg_out = "out/scenes", sg_condition = "day";
    uint64_t sg_seed = 1;
    int sg_k = 50, sg_store = 1, sg_workers = 0;
    bool sg_manifest_only = false;
    auto* scenegen = app.add_subcommand("scenegen", "generate a metric scene collection");
    scenegen->add_option("--collection", sg_name, "collection name");
    scenegen->add_option("--seed", sg_seed, "collection seed");
    scenegen->add_option("--scenes-per-distance", sg_k, "scenes per distance (standard: 50)");
    scenegen->add_option("--out", sg_out, "output directory");
    scenegen->add_option("--condition", sg_condition, "day, night, or lux:<value>");
    scenegen->add_option("--store-supersample", sg_store,
                         "supersampling of stored .sif files (1 = reference pixel pitch)");
    scenegen->add_flag("--manifest-only", sg_manifest_only, "write manifest.json only");
    scenegen->add_option("--workers", sg_workers, "worker threads (0 = auto)");

    // mtf
    std::string mtf_camera = "p1.4_f2.4", mtf_csv;
    bool mtf_grid = false;
    int mtf_window = 96, mtf_workers = 0;
    auto* mtf = app.add_subcommand("mtf", "measure slanted-edge MTF50");
    mtf->add_option("--camera", mtf_camera, "camera id from the default grid");
    mtf->add_flag("--grid", mtf_grid, "measure the whole default grid");
    mtf->add_option("--csv", mtf_csv, "write the MTF curve as CSV");
    mtf->add_option("--window", mtf_window, "edge target size in pixels");
    mtf->add_option("--workers", mtf_workers, "worker threads (0 = auto)");

    // run
    std::string run_config;
    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", run_config, "experiment config JSON")->required();

    // sweep-lux
    std::string sl_levels = "0.1,1,10,100", sl_out = "out/lux-sweep", sl_distances;
    uint64_t sl_seed = 1;
    int sl_k = 10, sl_workers = 0, sl_bootstrap = 0;
    auto* sweep = app.add_subcommand("sweep-lux", "anchor-camera illuminance sweep");
    sweep->add_option("--levels", sl_levels, "comma-separated lux levels");
    sweep->add_option("--out", sl_out, "output directory");
    sweep->add_option("--seed", sl_seed, "seed");
    sweep->add_option("--scenes-per-distance", sl_k, "scenes per distance");
    sweep->add_option("--distances", sl_distances, "comma-separated distances (m)");
    sweep->add_option("--workers", sl_workers, "worker threads (0 = auto)");
    sweep->add_option("--bootstrap", sl_bootstrap, "bootstrap replicates");

    // spm
    std::string spm_input, spm_axis = "mtf50", spm_out = "spm", spm_levels;
    auto* spm = app.add_subcommand("spm", "assemble system performance maps");
    spm->add_option("--input", spm_input, "experiment output directory")->required();
    spm->add_option("--axis", spm_axis, "mtf50 or lux");
    spm->add_option("--out", spm_out, "output base path");
    spm->add_option("--levels", spm_levels, "comma-separated contour levels");

    // od50
    std::string od_curve, od_records;
    int od_bootstrap = 0;
    uint64_t od_seed = 1;
    auto* od = app.add_subcommand("od50", "OD50 from an AP curve CSV");
    od->add_option("--curve", od_curve, "AP curve CSV")->required();
    od->add_option("--bootstrap", od_bootstrap, "bootstrap replicates (needs --records)");
    od->add_option("--records", od_records, "match records JSON (from an experiment run)");
    od->add_option("--seed", od_seed, "bootstrap seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scenegen->parsed())
            return cmd_scenegen(sg_name, sg_seed, sg_k, sg_out, sg_condition, sg_store,
                                sg_manifest_only, sg_workers > 0 ? sg_workers : default_workers());
        if (mtf->parsed())
            return cmd_mtf(mtf_camera, mtf_grid, mtf_csv, mtf_window,
                           mtf_workers > 0 ? mtf_workers : default_workers());
        if (run->parsed()) return cmd_run(run_config);
        if (sweep->parsed())
            return cmd_sweep_lux(sl_levels, sl_out, sl_seed, sl_k, sl_distances,
                                 sl_workers, sl_bootstrap);
        if (spm->parsed()) return cmd_spm(spm_input, spm_axis, spm_out, spm_levels);
        if (od->parsed()) return cmd_od50(od_curve, od_bootstrap, od_records, od_seed);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
