#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fcvg/raster.hpp"
#include "fcvg/tensor.hpp"

namespace fcvg {

enum class FrameFormat { png, ppm };

FrameFormat parse_frame_format(std::string_view name);
std::string_view extension(FrameFormat format);

/// 8-bit quantisation used at save time: round(clamp(v, 0, 1) · 255).
std::uint8_t quantize(double v);

/// Writes frame_0000.<ext>, frame_0001.<ext>, ... (at least four digits).
/// Single-channel videos are written as grey RGB. Returns the paths written.
std::vector<std::filesystem::path> save_frames(const Video& video, const std::filesystem::path& dir,
                                               FrameFormat format);
std::vector<std::filesystem::path> save_condition_frames(std::span<const ConditionFrame> frames,
                                                         const std::filesystem::path& dir, FrameFormat format);

/// Loads every frame_* .png / .ppm file in name order as a 3-channel video in
/// [0,1]. StructuralError for an empty directory or mismatched sizes;
/// ParseError (naming the file) for malformed files.
Video load_frames(const std::filesystem::path& dir);

/// Single 8-bit RGB image; the format follows the file extension.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

/// Binary PPM (P6) encoding of interleaved RGB bytes.
std::string encode_ppm(int width, int height, std::span<const std::uint8_t> rgb);

} // namespace fcvg
