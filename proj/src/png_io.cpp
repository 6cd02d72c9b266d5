#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "camsim/common.hpp"

namespace camsim {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& data) {
    std::vector<uint8_t> head;
    put_u32_be(head, uint32_t(data.size()));
    out.write(reinterpret_cast<const char*>(head.data()), 4);
    out.write(type, 4);
    if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()),
                                 std::streamsize(data.size()));
    uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), uInt(data.size()));
    std::vector<uint8_t> tail;
    put_u32_be(tail, crc);
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height, const uint8_t* rgb) {
    if (width <= 0 || height <= 0) throw data_error("png: empty image");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path);
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, uint32_t(width));
    put_u32_be(ihdr, uint32_t(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace
    write_chunk(out, "IHDR", ihdr);

    // Filter byte 0 (none) per scanline.
    const size_t stride = size_t(width) * 3;
    std::vector<uint8_t> scanlines((stride + 1) * size_t(height));
    for (int r = 0; r < height; ++r) {
        uint8_t* dst = scanlines.data() + size_t(r) * (stride + 1);
        dst[0] = 0;
        std::memcpy(dst + 1, rgb + size_t(r) * stride, stride);
    }

    uLongf bound = compressBound(uLong(scanlines.size()));
    std::vector<uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, scanlines.data(), uLong(scanlines.size()), 6) != Z_OK)
        throw error("png: deflate failed");
    idat.resize(bound);
    write_chunk(out, "IDAT", idat);
    write_chunk(out, "IEND", {});
    if (!out) throw data_error("short write: " + path);
}

}  // namespace camsim
