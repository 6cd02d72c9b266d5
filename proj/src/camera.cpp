#include "camsim/camera.hpp"

#include <cstdio>

namespace camsim {

CameraConfig make_camera(double pixel_um, double f_number) {
    CameraConfig cam;
    char id[32];
    std::snprintf(id, sizeof(id), "p%.1f_f%.1f", pixel_um, f_number);
    cam.id = id;
    cam.optics.f_number = f_number;
    cam.sensor.pixel_um = pixel_um;
    cam.sensor.conversion_gain_v_per_e =
        cam.sensor.voltage_swing_v / cam.sensor.well_capacity_e;
    return cam;
}

std::vector<CameraConfig> default_camera_grid() {
    // Dropped corners: (2.0, 1.8), (2.8, 1.8), (2.8, 2.4) are dominated by
    // pixel blur and would not separate from their neighbors.
    static const double grid[][2] = {
        {1.0, 1.8}, {1.0, 2.4}, {1.0, 4.0}, {1.0, 5.6},
        {1.4, 1.8}, {1.4, 2.4}, {1.4, 4.0}, {1.4, 5.6},
        {2.0, 2.4}, {2.0, 4.0}, {2.0, 5.6},
        {2.8, 4.0}, {2.8, 5.6},
    };
    std::vector<CameraConfig> out;
    for (const auto& g : grid) out.push_back(make_camera(g[0], g[1]));
    return out;
}

}  // namespace camsim
