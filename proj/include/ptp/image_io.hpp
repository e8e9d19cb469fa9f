#pragma once

#include "ptp/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ptp {

// Luminance 0.299R + 0.587G + 0.114B rounded half-up, in exact integer arithmetic.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Any PNG (gray, gray+alpha, RGB, RGBA, palette, 16-bit) as grayscale.
GrayImage read_gray_png(const std::filesystem::path& path);
// PNG mask: a pixel is foreground when any color channel is nonzero.
BinaryMask read_mask_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& img);
// Foreground is written as 255.
void write_png(const std::filesystem::path& path, const BinaryMask& mask);
void write_rgb_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);

std::vector<std::uint8_t> encode_png(const GrayImage& img);

} // namespace ptp
