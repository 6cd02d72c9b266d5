#include "camsim/sif.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace camsim {

namespace {
constexpr char kMagic[] = "SIF1\n";

// Samples are stored little-endian; this code assumes a little-endian host
// (checked once at write/read time).
bool host_is_little_endian() {
    const uint16_t probe = 1;
    uint8_t byte;
    std::memcpy(&byte, &probe, 1);
    return byte == 1;
}
}  // namespace

void write_sif(const SpectralImage& image, const std::string& path) {
    image.validate();
    if (!host_is_little_endian()) throw format_error("sif io requires a little-endian host");

    nlohmann::json header;
    header["width"] = image.width;
    header["height"] = image.height;
    header["wave_start"] = image.wave_start_nm;
    header["wave_step"] = image.wave_step_nm;
    header["n_wave"] = image.n_wave;
    header["sample_pitch_mm"] = image.sample_pitch_mm;
    header["unit"] = to_string(image.unit);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    out.write(kMagic, 5);
    const std::string line = header.dump();
    out.write(line.data(), std::streamsize(line.size()));
    out.put('\n');
    out.write(reinterpret_cast<const char*>(image.values.data()),
              std::streamsize(image.values.size() * sizeof(float)));
    if (!out) throw data_error("short write: " + path);
}

SpectralImage read_sif(const std::string& path) {
    if (!host_is_little_endian()) throw format_error("sif io requires a little-endian host");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);

    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kMagic, 5) != 0)
        throw format_error("sif magic/version mismatch: " + path);

    std::string line;
    if (!std::getline(in, line)) throw format_error("sif header missing: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("sif header parse error: ") + e.what());
    }

    SpectralImage img;
    try {
        img.width = header.at("width").get<int>();
        img.height = header.at("height").get<int>();
        img.wave_start_nm = header.at("wave_start").get<double>();
        img.wave_step_nm = header.at("wave_step").get<double>();
        img.n_wave = header.at("n_wave").get<int>();
        img.sample_pitch_mm = header.at("sample_pitch_mm").get<double>();
        img.unit = radiometric_unit_from_string(header.at("unit").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("sif header field error: ") + e.what());
    }
    if (img.width <= 0 || img.height <= 0 || img.n_wave < 1)
        throw format_error("sif header has invalid dimensions");

    const size_t n = size_t(img.n_wave) * size_t(img.height) * size_t(img.width);
    img.values.resize(n);
    in.read(reinterpret_cast<char*>(img.values.data()), std::streamsize(n * sizeof(float)));
    if (size_t(in.gcount()) != n * sizeof(float))
        throw format_error("sif payload truncated: " + path);
    // Exactly the declared payload, nothing more.
    char extra;
    if (in.read(&extra, 1)) throw format_error("sif payload longer than header declares");

    try {
        img.validate();
    } catch (const format_error& e) {
        throw format_error(std::string("sif payload invalid: ") + e.what());
    }
    return img;
}

}  // namespace camsim
