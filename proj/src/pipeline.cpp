#include "camsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "camsim/isp.hpp"

namespace camsim {

namespace fs = std::filesystem;

std::string Condition::label() const {
    switch (illumination) {
        case Illumination::Day: return "day";
        case Illumination::Night: return "night";
        case Illumination::ExplicitLux: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "lux%g", lux);
            return buf;
        }
    }
    return "day";
}

Condition Condition::parse(const std::string& text) {
    if (text == "day") return {Illumination::Day, 0.0};
    if (text == "night") return {Illumination::Night, 0.0};
    std::string num = text;
    if (num.rfind("lux:", 0) == 0) num = num.substr(4);
    else if (num.rfind("lux", 0) == 0) num = num.substr(3);
    try {
        size_t used = 0;
        const double lux = std::stod(num, &used);
        if (used == num.size() && lux > 0.0) return {Illumination::ExplicitLux, lux};
    } catch (...) {
    }
    throw config_error("cannot parse condition '" + text + "' (day, night, or lux:<value>)");
}

void ExperimentConfig::validate() const {
    if (scenes_per_distance < 1) throw config_error("scenes_per_distance must be >= 1");
    if (distances_m.empty()) throw config_error("distances_m must not be empty");
    if (conditions.empty()) throw config_error("conditions must not be empty");
    if (bootstrap_replicates < 0) throw config_error("bootstrap_replicates must be >= 0");
    if (out_dir.empty()) throw config_error("out_dir must not be empty");
    for (double level : contour_levels)
        if (!(level > 0.0) || !(level < 1.0))
            throw config_error("contour levels must lie in (0, 1)");
    for (const auto& cam : cameras) cam.validate();
}

namespace {

nlohmann::json camera_to_json(const CameraConfig& cam) {
    nlohmann::json j;
    j["id"] = cam.id;
    j["f_number"] = cam.optics.f_number;
    j["focal_length_mm"] = cam.optics.focal_length_mm;
    j["transmittance"] = cam.optics.transmittance;
    j["relative_illumination"] = cam.optics.relative_illumination;
    j["pixel_um"] = cam.sensor.pixel_um;
    j["fill_factor"] = cam.sensor.fill_factor;
    j["well_capacity_e"] = cam.sensor.well_capacity_e;
    j["conversion_gain_v_per_e"] = cam.sensor.conversion_gain_v_per_e;
    j["voltage_swing_v"] = cam.sensor.voltage_swing_v;
    j["read_noise_e"] = cam.sensor.read_noise_e;
    j["dark_current_e_per_s"] = cam.sensor.dark_current_e_per_s;
    j["black_level_dn"] = cam.sensor.black_level_dn;
    j["bit_depth"] = cam.sensor.bit_depth;
    j["analog_gain"] = cam.sensor.analog_gain;
    j["cfa"] = cam.sensor.cfa.to_string();
    j["ae_target_fraction"] = cam.policy.target_fraction;
    j["ae_max_exposure_s"] = cam.policy.max_exposure_s;
    j["ae_central_fraction"] = cam.policy.central_fraction;
    return j;
}

CameraConfig camera_from_json(const nlohmann::json& j) {
    CameraConfig cam = make_camera(j.at("pixel_um").get<double>(), j.at("f_number").get<double>());
    if (j.contains("id")) cam.id = j.at("id").get<std::string>();
    if (j.contains("focal_length_mm"))
        cam.optics.focal_length_mm = j.at("focal_length_mm").get<double>();
    if (j.contains("transmittance")) cam.optics.transmittance = j.at("transmittance").get<double>();
    if (j.contains("relative_illumination"))
        cam.optics.relative_illumination = j.at("relative_illumination").get<bool>();
    if (j.contains("fill_factor")) cam.sensor.fill_factor = j.at("fill_factor").get<double>();
    if (j.contains("well_capacity_e")) {
        cam.sensor.well_capacity_e = j.at("well_capacity_e").get<double>();
        cam.sensor.conversion_gain_v_per_e =
            cam.sensor.voltage_swing_v / cam.sensor.well_capacity_e;
    }
    if (j.contains("conversion_gain_v_per_e"))
        cam.sensor.conversion_gain_v_per_e = j.at("conversion_gain_v_per_e").get<double>();
    if (j.contains("voltage_swing_v"))
        cam.sensor.voltage_swing_v = j.at("voltage_swing_v").get<double>();
    if (j.contains("read_noise_e")) cam.sensor.read_noise_e = j.at("read_noise_e").get<double>();
    if (j.contains("dark_current_e_per_s"))
        cam.sensor.dark_current_e_per_s = j.at("dark_current_e_per_s").get<double>();
    if (j.contains("black_level_dn")) cam.sensor.black_level_dn = j.at("black_level_dn").get<int>();
    if (j.contains("bit_depth")) cam.sensor.bit_depth = j.at("bit_depth").get<int>();
    if (j.contains("analog_gain")) cam.sensor.analog_gain = j.at("analog_gain").get<double>();
    if (j.contains("cfa")) cam.sensor.cfa = CfaPattern::from_string(j.at("cfa").get<std::string>());
    if (j.contains("ae_target_fraction"))
        cam.policy.target_fraction = j.at("ae_target_fraction").get<double>();
    if (j.contains("ae_max_exposure_s"))
        cam.policy.max_exposure_s = j.at("ae_max_exposure_s").get<double>();
    if (j.contains("ae_central_fraction"))
        cam.policy.central_fraction = j.at("ae_central_fraction").get<double>();
    return cam;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["scenes_per_distance"] = c.scenes_per_distance;
    j["distances_m"] = c.distances_m;
    std::vector<std::string> conds;
    for (const auto& cond : c.conditions) conds.push_back(cond.label());
    j["conditions"] = conds;
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& cam : c.cameras) cams.push_back(camera_to_json(cam));
    j["cameras"] = std::move(cams);
    j["detector"] = {
        {"kind", c.detector.kind == DetectorChoice::Kind::Baseline ? "baseline" : "external"},
        {"external_dir", c.detector.external_dir},
        {"k_mad", c.detector.baseline.k_mad},
        {"min_area_px", c.detector.baseline.min_area_px},
        {"smooth_radius", c.detector.baseline.smooth_radius},
    };
    j["bootstrap_replicates"] = c.bootstrap_replicates;
    j["contour_levels"] = c.contour_levels;
    j["write_images"] = c.write_images;
    j["adaptive_supersampling"] = c.adaptive_supersampling;
    j["mtf_window_px"] = c.mtf_window_px;
    // Scene-synthesis assumptions that affect the outputs.
    j["render"] = {
        {"focal_length_mm", c.render.fov.focal_length_mm},
        {"die_w_mm", c.render.fov.die_w_mm},
        {"die_h_mm", c.render.fov.die_h_mm},
        {"camera_height_m", c.render.fov.camera_height_m},
        {"wave_start_nm", c.render.wave_start_nm},
        {"wave_step_nm", c.render.wave_step_nm},
        {"n_wave", c.render.n_wave},
        {"ref_pixel_um", c.render.ref_pixel_um},
        {"supersample", c.render.supersample},
        {"margin_factor", c.render.margin_factor},
    };
    return j;
}

}  // namespace

std::string experiment_config_json(const ExperimentConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

uint64_t experiment_config_hash(const ExperimentConfig& config) {
    return hash_str(experiment_config_json(config));
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    try {
        if (j.contains("name")) c.name = j.at("name").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<int>();
        if (j.contains("scenes_per_distance"))
            c.scenes_per_distance = j.at("scenes_per_distance").get<int>();
        if (j.contains("distances_m"))
            c.distances_m = j.at("distances_m").get<std::vector<double>>();
        if (j.contains("conditions")) {
            c.conditions.clear();
            for (const auto& s : j.at("conditions"))
                c.conditions.push_back(Condition::parse(s.get<std::string>()));
        }
        if (j.contains("cameras")) {
            const auto& cams = j.at("cameras");
            if (cams.is_string()) {
                if (cams.get<std::string>() != "default")
                    throw config_error("cameras must be \"default\" or a list");
            } else {
                for (const auto& cj : cams) c.cameras.push_back(camera_from_json(cj));
            }
        }
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            const std::string kind = d.value("kind", std::string("baseline"));
            if (kind == "baseline") c.detector.kind = DetectorChoice::Kind::Baseline;
            else if (kind == "external") c.detector.kind = DetectorChoice::Kind::External;
            else throw config_error("unknown detector kind: " + kind);
            c.detector.external_dir = d.value("external_dir", std::string());
            c.detector.baseline.k_mad = d.value("k_mad", c.detector.baseline.k_mad);
            c.detector.baseline.min_area_px =
                d.value("min_area_px", c.detector.baseline.min_area_px);
            c.detector.baseline.smooth_radius =
                d.value("smooth_radius", c.detector.baseline.smooth_radius);
        }
        if (j.contains("bootstrap_replicates"))
            c.bootstrap_replicates = j.at("bootstrap_replicates").get<int>();
        if (j.contains("contour_levels"))
            c.contour_levels = j.at("contour_levels").get<std::vector<double>>();
        if (j.contains("write_images")) c.write_images = j.at("write_images").get<bool>();
        if (j.contains("adaptive_supersampling"))
            c.adaptive_supersampling = j.at("adaptive_supersampling").get<bool>();
        if (j.contains("mtf_window_px")) c.mtf_window_px = j.at("mtf_window_px").get<int>();
        if (j.contains("render")) {
            const auto& r = j.at("render");
            if (r.contains("focal_length_mm"))
                c.render.fov.focal_length_mm = r.at("focal_length_mm").get<double>();
            if (r.contains("camera_height_m"))
                c.render.fov.camera_height_m = r.at("camera_height_m").get<double>();
            if (r.contains("margin_factor"))
                c.render.margin_factor = r.at("margin_factor").get<double>();
            if (r.contains("supersample")) c.render.supersample = r.at("supersample").get<int>();
            if (r.contains("ref_pixel_um"))
                c.render.ref_pixel_um = r.at("ref_pixel_um").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config field error: ") + e.what());
    }
    c.validate();
    return c;
}

const CameraConditionResult* ExperimentResult::find(const std::string& camera_id,
                                                    const std::string& condition) const {
    for (const auto& r : results)
        if (r.camera_id == camera_id && r.condition == condition) return &r;
    return nullptr;
}

namespace {

struct Task {
    size_t camera_index;
    size_t condition_index;
    size_t scene_index;
};

std::string hash_hex(uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& user_config) {
    ExperimentConfig config = user_config;
    if (config.cameras.empty()) config.cameras = default_camera_grid();
    config.validate();
    const int workers = config.workers > 0 ? config.workers : default_workers();

    fs::create_directories(config.out_dir);
    const std::string config_json = experiment_config_json(config);
    const std::string config_hash = hash_hex(hash_str(config_json));
    const fs::path out_root(config.out_dir);
    {
        const fs::path config_path = out_root / "config.json";
        if (fs::exists(config_path)) {
            const std::string existing = read_text_file(config_path.string());
            if (existing != config_json) {
                if (hash_hex(hash_str(existing)) == config_hash)
                    throw config_error("config hash collision with differing content in " +
                                       config_path.string());
                throw config_error(
                    "output directory holds a different experiment config; use a fresh "
                    "out_dir or restore the original config");
            }
        } else {
            write_text_file(config_path.string(), config_json);
        }
    }

    // Per-condition scene collections (manifests only; scenes re-render per
    // camera at capture time).
    std::vector<SceneManifest> manifests;
    for (const auto& cond : config.conditions) {
        CollectionOptions opts;
        opts.distances_m = config.distances_m;
        opts.scenes_per_distance = config.scenes_per_distance;
        opts.illumination = cond.illumination;
        opts.explicit_lux = cond.lux;
        opts.write_scenes = false;
        const fs::path dir = out_root / "collections" / cond.label();
        manifests.push_back(generate_collection(config.name + "-" + cond.label(), config.seed,
                                                config.render, opts, dir.string(), workers));
    }

    // MTF50 per camera, cached on disk.
    fs::create_directories(out_root / "mtf");
    std::vector<double> camera_mtf50(config.cameras.size(), 0.0);
    ExperimentResult result;
    result.out_dir = config.out_dir;
    std::atomic<int64_t> tasks_run{0}, tasks_skipped{0};

    parallel_for(int64_t(config.cameras.size()), workers, [&](int64_t i) {
        const auto& cam = config.cameras[size_t(i)];
        const fs::path path = out_root / "mtf" / (cam.id + ".json");
        if (fs::exists(path)) {
            nlohmann::json j = nlohmann::json::parse(read_text_file(path.string()));
            if (j.value("config_hash", std::string()) == config_hash) {
                camera_mtf50[size_t(i)] = j.at("mtf50_cyc_per_mm").get<double>();
                ++tasks_skipped;
                return;
            }
        }
        MtfOptions opts;
        opts.window_px = config.mtf_window_px;
        const MtfResult mtf = measure_mtf50(cam, config.render, opts);
        camera_mtf50[size_t(i)] = mtf.mtf50_cyc_per_mm;
        nlohmann::json j;
        j["camera_id"] = cam.id;
        j["mtf50_cyc_per_mm"] = mtf.mtf50_cyc_per_mm;
        j["extrapolated"] = mtf.extrapolated;
        j["edge_angle_deg"] = mtf.edge_angle_deg;
        j["config_hash"] = config_hash;
        write_text_file(path.string(), j.dump(2) + "\n");
        ++tasks_run;
    });

    // Capture + detect tasks (baseline detector only; external detections
    // arrive through files).
    std::vector<Task> tasks;
    if (config.detector.kind == DetectorChoice::Kind::Baseline) {
        for (size_t ci = 0; ci < config.cameras.size(); ++ci)
            for (size_t di = 0; di < config.conditions.size(); ++di)
                for (size_t si = 0; si < manifests[di].scenes.size(); ++si)
                    tasks.push_back({ci, di, si});
    }

    auto pair_dir = [&](const CameraConfig& cam, const Condition& cond) {
        return cam.id + "__" + cond.label();
    };

    parallel_for(int64_t(tasks.size()), workers, [&](int64_t ti) {
        const Task& task = tasks[size_t(ti)];
        const auto& cam = config.cameras[task.camera_index];
        const auto& cond = config.conditions[task.condition_index];
        const auto& entry = manifests[task.condition_index].scenes[task.scene_index];
        const std::string pair = pair_dir(cam, cond);

        const fs::path det_dir = out_root / "detections" / pair;
        fs::create_directories(det_dir);
        const fs::path frag_path = det_dir / (entry.spec.scene_id + ".json");
        if (fs::exists(frag_path)) {
            try {
                nlohmann::json j = nlohmann::json::parse(read_text_file(frag_path.string()));
                if (j.value("config_hash", std::string()) == config_hash) {
                    ++tasks_skipped;
                    return;
                }
            } catch (...) {
                // fall through and recompute
            }
        }

        const SceneLayout layout = build_scene_layout(entry.spec, config.render);
        const int ss = config.adaptive_supersampling
                           ? adaptive_supersample(cam.sensor.pixel_um, cam.optics.f_number,
                                                  config.render.wave_start_nm)
                           : config.render.supersample;
        const FastRenderResult rates =
            render_scene_electron_rates(layout, cam.optics, cam.sensor, ss);

        // Emissive patches are excluded from the exposure meter; the policy
        // otherwise saturates on the headlights and never reaches its cap.
        const Plane<double> meter =
            (rates.ambient ? *rates.ambient : rates.full).mosaic(cam.sensor.cfa);
        const double t = auto_exposure_from_rates(meter, cam.sensor, cam.policy);

        Plane<double> mean = rates.full.mosaic(cam.sensor.cfa);
        for (auto& v : mean.values()) v *= t;
        const uint64_t capture_seed =
            derive_seed(config.seed, hash_str("capture"), hash_str(pair + "/" + entry.spec.scene_id));
        const RawImage raw = capture_from_expected(mean, cam.sensor, t, capture_seed, 1);

        RgbImage rgb = render_display(demosaic(raw));
        rgb.scene_id = entry.spec.scene_id;
        rgb.camera_id = cam.id;
        rgb.exposure_time_s = t;

        if (config.write_images) {
            const fs::path img_dir = out_root / "images" / pair;
            fs::create_directories(img_dir);
            save_raw(raw, (img_dir / (entry.spec.scene_id + "_raw")).string());
            save_rgb(rgb, (img_dir / entry.spec.scene_id).string());
        }

        std::vector<Detection> dets = baseline_detect(rgb, config.detector.baseline);
        for (auto& d : dets) d.image_id = entry.spec.scene_id;

        nlohmann::json j;
        j["config_hash"] = config_hash;
        j["camera_id"] = cam.id;
        j["condition"] = cond.label();
        j["scene_id"] = entry.spec.scene_id;
        j["seed"] = capture_seed;
        j["supersample"] = ss;
        j["exposure_time_s"] = t;
        j["saturated_fraction"] = raw.saturated_fraction;
        nlohmann::json dj = nlohmann::json::array();
        for (const auto& d : dets)
            dj.push_back({{"bbox", {d.x, d.y, d.w, d.h}}, {"score", d.score}});
        j["detections"] = std::move(dj);
        write_text_file(frag_path.string(), j.dump(2) + "\n");
        ++tasks_run;
    });

    // Merge fragments, evaluate metrics per camera × condition.
    fs::create_directories(out_root / "curves");
    fs::create_directories(out_root / "records");
    std::vector<std::string> runlog;

    for (size_t ci = 0; ci < config.cameras.size(); ++ci) {
        const auto& cam = config.cameras[ci];
        for (size_t di = 0; di < config.conditions.size(); ++di) {
            const auto& cond = config.conditions[di];
            const auto& manifest = manifests[di];
            const std::string pair = pair_dir(cam, cond);

            DetectionSet set;
            std::map<std::string, std::pair<double, double>> exposure_sat;
            if (config.detector.kind == DetectorChoice::Kind::Baseline) {
                set.detector_name = "baseline";
                for (const auto& entry : manifest.scenes) {
                    const fs::path frag_path =
                        out_root / "detections" / pair / (entry.spec.scene_id + ".json");
                    nlohmann::json j = nlohmann::json::parse(read_text_file(frag_path.string()));
                    if (j.value("config_hash", std::string()) != config_hash)
                        throw data_error("stale detection fragment: " + frag_path.string());
                    exposure_sat[entry.spec.scene_id] = {j.at("exposure_time_s").get<double>(),
                                                         j.at("saturated_fraction").get<double>()};
                    for (const auto& dj : j.at("detections")) {
                        Detection d;
                        d.image_id = entry.spec.scene_id;
                        d.x = dj.at("bbox")[0].get<double>();
                        d.y = dj.at("bbox")[1].get<double>();
                        d.w = dj.at("bbox")[2].get<double>();
                        d.h = dj.at("bbox")[3].get<double>();
                        d.score = dj.at("score").get<double>();
                        set.detections.push_back(std::move(d));
                    }
                }
                save_detections(set, (out_root / "detections" / (pair + ".json")).string());
            } else {
                const fs::path path = fs::path(config.detector.external_dir) / (pair + ".json");
                set = load_detections(path.string(), manifest);
            }

            // Ground truth in this camera's pixel grid.
            std::map<std::string, std::pair<double, Box>> gt;
            std::map<std::string, std::vector<Box>> gt_boxes;
            for (const auto& entry : manifest.scenes) {
                const GroundTruthBox box =
                    ground_truth_bbox(entry.spec, config.render, cam.sensor.pixel_um);
                gt[entry.spec.scene_id] = {
                    entry.spec.distance_m,
                    Box{double(box.x), double(box.y), double(box.w), double(box.h)}};
                gt_boxes[entry.spec.scene_id] = {
                    Box{double(box.x), double(box.y), double(box.w), double(box.h)}};
            }

            CameraConditionResult res;
            res.camera_id = cam.id;
            res.condition = cond.label();
            res.mtf50_cyc_per_mm = camera_mtf50[ci];
            res.curve = ap_by_distance(gt, set.detections);
            res.curve.camera_id = cam.id;
            res.curve.condition = cond.label();
            save_curve_csv(res.curve, (out_root / "curves" / (pair + ".csv")).string());

            // Match records: audit export + bootstrap input.
            const auto thresholds = default_iou_thresholds();
            std::vector<SceneMatchRecord> records;
            std::map<std::string, std::vector<Detection>> dets_by_scene;
            for (const auto& d : set.detections) dets_by_scene[d.image_id].push_back(d);
            for (const auto& entry : manifest.scenes) {
                records.push_back(match_scene(entry.spec.scene_id, entry.spec.distance_m,
                                              gt_boxes[entry.spec.scene_id],
                                              dets_by_scene[entry.spec.scene_id], thresholds));
            }
            {
                nlohmann::json j;
                j["camera_id"] = cam.id;
                j["condition"] = cond.label();
                j["iou_thresholds"] = thresholds;
                nlohmann::json rj = nlohmann::json::array();
                for (const auto& r : records) {
                    nlohmann::json e;
                    e["scene_id"] = r.scene_id;
                    e["distance_m"] = r.distance_m;
                    e["n_gt"] = r.n_gt;
                    e["scores"] = r.scores;
                    nlohmann::json tp = nlohmann::json::array();
                    for (const auto& row : r.tp) tp.push_back(row);
                    e["tp"] = std::move(tp);
                    rj.push_back(std::move(e));
                }
                j["scenes"] = std::move(rj);
                write_text_file((out_root / "records" / (pair + ".json")).string(),
                                j.dump(2) + "\n");
            }

            res.od50_result = od50(res.curve);
            if (config.bootstrap_replicates >= 2) {
                try {
                    const BootstrapResult boot =
                        bootstrap_od50(records, config.bootstrap_replicates,
                                       derive_seed(config.seed, hash_str("boot"), hash_str(pair)),
                                       thresholds.size(), workers);
                    res.od50_result.bootstrap_std_m = boot.std_m;
                    res.od50_result.bootstrap_used = boot.used;
                    res.od50_result.bootstrap_excluded = boot.excluded;
                } catch (const data_error&) {
                    res.od50_result.bootstrap_used = 0;
                    res.od50_result.bootstrap_excluded = config.bootstrap_replicates;
                }
            }
            double sat = 0.0;
            for (const auto& [id, es] : exposure_sat) sat += es.second;
            res.mean_saturated_fraction =
                exposure_sat.empty() ? 0.0 : sat / double(exposure_sat.size());

            runlog.push_back("eval " + pair);
            result.results.push_back(std::move(res));
        }
    }

    // System performance maps.
    fs::create_directories(out_root / "spm");
    std::set<std::string> ambient_conditions;
    std::vector<double> lux_levels;
    for (const auto& cond : config.conditions) {
        if (cond.illumination == Illumination::ExplicitLux) lux_levels.push_back(cond.lux);
        else ambient_conditions.insert(cond.label());
    }
    if (config.cameras.size() >= 2) {
        for (const auto& cond_label : ambient_conditions) {
            std::vector<std::pair<double, ApCurve>> keyed;
            for (size_t ci = 0; ci < config.cameras.size(); ++ci) {
                const auto* r = result.find(config.cameras[ci].id, cond_label);
                if (r) keyed.push_back({r->mtf50_cyc_per_mm, r->curve});
            }
            if (keyed.size() < 2) continue;
            SpmOptions opts;
            opts.y_label = "mtf50_cyc_per_mm";
            const SpmGrid grid = build_grid(keyed, opts);
            const auto iso = contours(grid, config.contour_levels);
            const std::string base = (out_root / "spm" / ("spm_mtf50_" + cond_label)).string();
            emit_csv(grid, base + ".csv");
            emit_svg(grid, iso, base + ".svg");
            result.spm_files.push_back(base + ".csv");
            result.spm_files.push_back(base + ".svg");
        }
    }
    if (lux_levels.size() >= 2) {
        for (const auto& cam : config.cameras) {
            std::vector<std::pair<double, ApCurve>> keyed;
            for (const auto& cond : config.conditions) {
                if (cond.illumination != Illumination::ExplicitLux) continue;
                const auto* r = result.find(cam.id, cond.label());
                if (r) keyed.push_back({cond.lux, r->curve});
            }
            if (keyed.size() < 2) continue;
            SpmOptions opts;
            opts.y_label = "illuminance_lux";
            const SpmGrid grid = build_grid(keyed, opts);
            const auto iso = contours(grid, config.contour_levels);
            const std::string base = (out_root / "spm" / ("spm_lux_" + cam.id)).string();
            emit_csv(grid, base + ".csv");
            emit_svg(grid, iso, base + ".svg");
            result.spm_files.push_back(base + ".csv");
            result.spm_files.push_back(base + ".svg");
        }
    }

    // Summary + run log (sorted, so bytes do not depend on worker timing).
    {
        nlohmann::json j;
        j["config_hash"] = config_hash;
        j["name"] = config.name;
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& r : result.results) {
            nlohmann::json e;
            e["camera_id"] = r.camera_id;
            e["condition"] = r.condition;
            e["mtf50_cyc_per_mm"] = r.mtf50_cyc_per_mm;
            e["od50_m"] = r.od50_result.od50_m;
            e["od50_method"] = to_string(r.od50_result.method);
            if (r.od50_result.bootstrap_std_m) {
                e["bootstrap_std_m"] = *r.od50_result.bootstrap_std_m;
                e["bootstrap_used"] = r.od50_result.bootstrap_used;
                e["bootstrap_excluded"] = r.od50_result.bootstrap_excluded;
            }
            e["mean_saturated_fraction"] = r.mean_saturated_fraction;
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : r.curve.points)
                pts.push_back({{"distance_m", p.distance_m}, {"ap", p.ap}, {"n_scenes", p.n_scenes}});
            e["curve"] = std::move(pts);
            entries.push_back(std::move(e));
        }
        j["results"] = std::move(entries);
        write_text_file((out_root / "results.json").string(), j.dump(2) + "\n");
    }
    {
        std::vector<std::string> lines;
        for (const auto& cam : config.cameras)
            lines.push_back("mtf " + cam.id + " config=" + config_hash);
        for (const auto& t : tasks) {
            const auto& entry = manifests[t.condition_index].scenes[t.scene_index];
            lines.push_back("capture " +
                            pair_dir(config.cameras[t.camera_index],
                                     config.conditions[t.condition_index]) +
                            "/" + entry.spec.scene_id + " seed=" +
                            std::to_string(derive_seed(
                                config.seed, hash_str("capture"),
                                hash_str(pair_dir(config.cameras[t.camera_index],
                                                  config.conditions[t.condition_index]) +
                                         "/" + entry.spec.scene_id))) +
                            " config=" + config_hash);
        }
        lines.insert(lines.end(), runlog.begin(), runlog.end());
        std::sort(lines.begin(), lines.end());
        std::string text;
        for (const auto& l : lines) text += l + "\n";
        write_text_file((out_root / "runlog.txt").string(), text);
    }

    result.tasks_run = tasks_run.load();
    result.tasks_skipped = tasks_skipped.load();
    return result;
}

}  // namespace camsim
