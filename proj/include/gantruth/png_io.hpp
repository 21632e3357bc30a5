#pragma once

#include <string>

#include "gantruth/image.hpp"

namespace gantruth {

// Minimal PNG codec covering exactly what the dataset layout needs:
// 8-bit gray, 8-bit RGB and 16-bit gray, non-interlaced, filter None,
// deflate "stored" blocks. Writing is byte-deterministic by construction
// (no compressor heuristics involved); the reader accepts only streams in
// this same subset, which is all this project ever produces.
void write_png_rgb8(const std::string& path, const ImageU8& img);
void write_png_gray8(const std::string& path, const ImageU8& img);
void write_png_gray16(const std::string& path, const Image16& img);

ImageU8 read_png_rgb8(const std::string& path);
ImageU8 read_png_gray8(const std::string& path);
Image16 read_png_gray16(const std::string& path);

// in-memory encoders (used for hashing without touching disk)
std::vector<uint8_t> encode_png_rgb8(const ImageU8& img);

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed = 0);

} // namespace gantruth
