#pragma once

#include <cstdint>
#include <string>

#include "tsgm/image.hpp"

namespace tsgm::io {

// Reads an 8-bit grayscale image from a binary PGM (P5) or a PNG file, sniffed
// by magic bytes. Color PNG input is converted with Rec.601 luma weights
// (0.299 R + 0.587 G + 0.114 B); 16-bit PNG input is rejected here.
GrayImage read_gray(const std::string& path);

// Strict 16-bit single-channel PNG reader, wrong bit depth or channel count is
// a format error.
Image<std::uint16_t> read_gray16_png(const std::string& path);

void write_gray_png(const std::string& path, const GrayImage& img);
void write_gray16_png(const std::string& path, const Image<std::uint16_t>& img);

}  // namespace tsgm::io
