#pragma once

// Latent video containers. A Frame is one H x W grid of standardized
// intensities; a Clip is an ordered run of frames sharing H x W, stored
// contiguously in (frame, row, col) order.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace noisesearch {

struct Shape {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t frame_size() const { return height * width; }
  std::size_t size() const { return frames * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

class Frame {
 public:
  Frame() = default;
  Frame(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width, fill) {}
  Frame(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

class Clip {
 public:
  Clip() = default;
  explicit Clip(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
  Clip(Shape shape, std::vector<double> data);

  static Clip from_frames(std::span<const Frame> frames);

  const Shape& shape() const { return shape_; }
  std::size_t frames() const { return shape_.frames; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t frame_size() const { return shape_.frame_size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::span<double> frame_values(std::size_t f) {
    return std::span<double>(data_).subspan(f * shape_.frame_size(), shape_.frame_size());
  }
  std::span<const double> frame_values(std::size_t f) const {
    return std::span<const double>(data_).subspan(f * shape_.frame_size(), shape_.frame_size());
  }

  Frame frame(std::size_t f) const;
  void set_frame(std::size_t f, const Frame& frame);
  void append_frame(const Frame& frame);

  double& at(std::size_t f, std::size_t row, std::size_t col) {
    return data_[(f * shape_.height + row) * shape_.width + col];
  }
  double at(std::size_t f, std::size_t row, std::size_t col) const {
    return data_[(f * shape_.height + row) * shape_.width + col];
  }

  // Frames [first, first + count).
  Clip slice(std::size_t first, std::size_t count) const;

  bool all_finite() const;

  friend bool operator==(const Clip&, const Clip&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Clip frame_as_clip(const Frame& frame);

// ||a - b|| / ||b||; returns ||a|| when b is zero.
double relative_l2(std::span<const double> a, std::span<const double> b);
inline double relative_l2(const Clip& a, const Clip& b) { return relative_l2(a.values(), b.values()); }

}  // namespace noisesearch
