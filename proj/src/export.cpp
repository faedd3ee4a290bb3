#include "noisesearch/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace noisesearch {

int gray_level(double v) {
  if (std::isnan(v)) throw std::invalid_argument("gray_level: NaN intensity");
  const double x = std::floor((v + 1.0) * 127.5 + 0.5);
  return static_cast<int>(std::clamp(x, 0.0, 255.0));
}

std::string frame_to_pgm(std::span<const double> frame, std::size_t height, std::size_t width) {
  if (frame.size() != height * width) throw std::invalid_argument("frame_to_pgm: size mismatch");
  std::ostringstream out;
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c > 0) out << ' ';
      out << gray_level(frame[r * width + c]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path> export_frames(const Clip& video, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("export_frames: cannot create directory " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (std::size_t f = 0; f < video.frames(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", f);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("export_frames: cannot write " + path.string());
    out << frame_to_pgm(video.frame_values(f), video.height(), video.width());
    if (!out) throw std::runtime_error("export_frames: write failed for " + path.string());
    paths.push_back(path);
  }
  return paths;
}

}  // namespace noisesearch
