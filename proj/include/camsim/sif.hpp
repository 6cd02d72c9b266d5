#pragma once

#include <string>

#include "camsim/spectral.hpp"

namespace camsim {

// `.sif` spectral image container: ASCII magic "SIF1\n", one JSON header
// line {"width","height","wave_start","wave_step","n_wave","sample_pitch_mm",
// "unit"} terminated by "\n", then little-endian float32 samples in
// band-major, row-major order. write∘read is the identity, bit-exact.

void write_sif(const SpectralImage& image, const std::string& path);
SpectralImage read_sif(const std::string& path);

}  // namespace camsim
