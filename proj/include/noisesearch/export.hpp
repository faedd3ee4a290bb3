#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "noisesearch/tensor.hpp"

namespace noisesearch {

// Maps [-1, 1] affinely onto [0, 255], rounding half up and clamping.
int gray_level(double v);

// Plain (P2) PGM text for one frame, maxval 255.
std::string frame_to_pgm(std::span<const double> frame, std::size_t height, std::size_t width);

// Writes frame_0000.pgm, frame_0001.pgm, ... into dir (created if missing).
// Returns the written paths.
std::vector<std::filesystem::path> export_frames(const Clip& video, const std::filesystem::path& dir);

}  // namespace noisesearch
