#pragma once

// NBT1 tensor files: the 4 magic bytes "NBT1", a little-endian u32 rank, rank
// little-endian u32 dims, then float32 little-endian values in row-major order.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisesearch/tensor.hpp"

namespace noisesearch {

enum class TensorIoErrorKind { Io, BadMagic, Truncated, DimOverflow, BadRank, TrailingData };

class TensorIoError : public std::runtime_error {
 public:
  TensorIoError(TensorIoErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  TensorIoErrorKind kind() const { return kind_; }

 private:
  TensorIoErrorKind kind_;
};

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

inline constexpr std::uint32_t kMaxTensorRank = 8;
// Largest element count a file may declare.
inline constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 32;

std::vector<unsigned char> encode_tensor(const RawTensor& t);
RawTensor decode_tensor(const std::vector<unsigned char>& bytes);

void save_tensor(const std::filesystem::path& path, const RawTensor& t);
RawTensor load_tensor(const std::filesystem::path& path);

// Clips are stored as rank-3 (frames, height, width) tensors; values are
// rounded to float32 on save.
RawTensor clip_to_tensor(const Clip& clip);
Clip tensor_to_clip(const RawTensor& t);
void save_clip(const std::filesystem::path& path, const Clip& clip);
Clip load_clip(const std::filesystem::path& path);

// A corpus is one rank-4 (clips, frames, height, width) tensor.
void save_corpus(const std::filesystem::path& path, const std::vector<Clip>& corpus);
std::vector<Clip> load_corpus(const std::filesystem::path& path);

}  // namespace noisesearch
