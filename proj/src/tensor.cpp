#include "noisesearch/tensor.hpp"

#include <cmath>

namespace noisesearch {

Frame::Frame(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height_ * width_)
    throw std::invalid_argument("Frame: data size does not match height x width");
}

Clip::Clip(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size())
    throw std::invalid_argument("Clip: data size does not match shape");
}

Clip Clip::from_frames(std::span<const Frame> frames) {
  if (frames.empty()) return Clip{};
  Shape shape{frames.size(), frames.front().height(), frames.front().width()};
  Clip clip(shape);
  for (std::size_t f = 0; f < frames.size(); ++f) clip.set_frame(f, frames[f]);
  return clip;
}

Frame Clip::frame(std::size_t f) const {
  if (f >= shape_.frames) throw std::out_of_range("Clip::frame: index out of range");
  auto src = frame_values(f);
  return Frame(shape_.height, shape_.width, std::vector<double>(src.begin(), src.end()));
}

void Clip::set_frame(std::size_t f, const Frame& frame) {
  if (f >= shape_.frames) throw std::out_of_range("Clip::set_frame: index out of range");
  if (frame.height() != shape_.height || frame.width() != shape_.width)
    throw std::invalid_argument("Clip::set_frame: frame shape mismatch");
  auto dst = frame_values(f);
  std::copy(frame.values().begin(), frame.values().end(), dst.begin());
}

void Clip::append_frame(const Frame& frame) {
  if (shape_.frames == 0) {
    shape_.height = frame.height();
    shape_.width = frame.width();
  } else if (frame.height() != shape_.height || frame.width() != shape_.width) {
    throw std::invalid_argument("Clip::append_frame: frame shape mismatch");
  }
  data_.insert(data_.end(), frame.values().begin(), frame.values().end());
  ++shape_.frames;
}

Clip Clip::slice(std::size_t first, std::size_t count) const {
  if (first + count > shape_.frames) throw std::out_of_range("Clip::slice: range out of bounds");
  Clip out(Shape{count, shape_.height, shape_.width});
  const auto fs = shape_.frame_size();
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * fs),
            data_.begin() + static_cast<std::ptrdiff_t>((first + count) * fs), out.data_.begin());
  return out;
}

bool Clip::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Clip frame_as_clip(const Frame& frame) {
  Clip clip(Shape{1, frame.height(), frame.width()});
  clip.set_frame(0, frame);
  return clip;
}

double relative_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_l2: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace noisesearch
