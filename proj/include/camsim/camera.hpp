#pragma once

#include <string>
#include <vector>

#include "camsim/optics.hpp"
#include "camsim/sensor.hpp"

namespace camsim {

/// One simulated imaging system: optics + sensor + acquisition policy.
struct CameraConfig {
    std::string id;
    OpticsConfig optics;
    SensorConfig sensor;
    ExposurePolicy policy;

    void validate() const {
        optics.validate();
        sensor.validate();
        policy.validate();
    }
};

CameraConfig make_camera(double pixel_um, double f_number);

/// The 13-camera default grid: pixel sizes {1.0, 1.4, 2.0, 2.8} µm crossed
/// with f-numbers {1.8, 2.4, 4.0, 5.6}, minus three high-blur/low-resolution
/// corners, so measured MTF50 spans roughly 50-200 cycles/mm and at least
/// two cameras land on the same MTF50. Includes the (1.4 µm, f/2.4) anchor.
std::vector<CameraConfig> default_camera_grid();

}  // namespace camsim
