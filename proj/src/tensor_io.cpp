#include "noisesearch/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

namespace noisesearch {

namespace {

constexpr unsigned char kMagic[4] = {'N', 'B', 'T', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t element_count(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) {
    if (d != 0 && n > kMaxTensorElements / d)
      throw TensorIoError(TensorIoErrorKind::DimOverflow, "NBT1: element count overflows");
    n *= d;
  }
  if (n > kMaxTensorElements) throw TensorIoError(TensorIoErrorKind::DimOverflow, "NBT1: element count overflows");
  return n;
}

}  // namespace

std::vector<unsigned char> encode_tensor(const RawTensor& t) {
  if (t.dims.empty() || t.dims.size() > kMaxTensorRank)
    throw TensorIoError(TensorIoErrorKind::BadRank, "NBT1: rank must lie in [1, 8]");
  if (element_count(t.dims) != t.values.size())
    throw std::invalid_argument("NBT1: value count does not match dims");
  std::vector<unsigned char> out;
  out.reserve(8 + 4 * t.dims.size() + 4 * t.values.size());
  for (unsigned char b : kMagic) out.push_back(b);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) put_u32(out, d);
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RawTensor decode_tensor(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4) throw TensorIoError(TensorIoErrorKind::Truncated, "NBT1: file shorter than the magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw TensorIoError(TensorIoErrorKind::BadMagic, "NBT1: bad magic");
  if (bytes.size() < 8) throw TensorIoError(TensorIoErrorKind::Truncated, "NBT1: missing rank");
  const std::uint32_t rank = get_u32(bytes.data() + 4);
  if (rank == 0 || rank > kMaxTensorRank) throw TensorIoError(TensorIoErrorKind::BadRank, "NBT1: rank must lie in [1, 8]");
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw TensorIoError(TensorIoErrorKind::Truncated, "NBT1: missing dims");
  RawTensor t;
  t.dims.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.dims[i] = get_u32(bytes.data() + 8 + 4 * i);
  const std::uint64_t n = element_count(t.dims);
  const std::uint64_t payload = bytes.size() - header;
  if (payload < 4 * n) throw TensorIoError(TensorIoErrorKind::Truncated, "NBT1: missing values");
  if (payload > 4 * n) throw TensorIoError(TensorIoErrorKind::TrailingData, "NBT1: trailing bytes after values");
  t.values.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < t.values.size(); ++i)
    t.values[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  return t;
}

void save_tensor(const std::filesystem::path& path, const RawTensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorIoError(TensorIoErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorIoError(TensorIoErrorKind::Io, "write failed: " + path.string());
}

RawTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorIoError(TensorIoErrorKind::Io, "cannot open for reading: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

RawTensor clip_to_tensor(const Clip& clip) {
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(clip.frames()), static_cast<std::uint32_t>(clip.height()),
            static_cast<std::uint32_t>(clip.width())};
  t.values.reserve(clip.size());
  for (double v : clip.values()) t.values.push_back(static_cast<float>(v));
  return t;
}

Clip tensor_to_clip(const RawTensor& t) {
  if (t.dims.size() != 3) throw TensorIoError(TensorIoErrorKind::BadRank, "NBT1: a clip needs rank 3");
  Clip clip(Shape{t.dims[0], t.dims[1], t.dims[2]});
  auto out = clip.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.values[i];
  return clip;
}

void save_clip(const std::filesystem::path& path, const Clip& clip) { save_tensor(path, clip_to_tensor(clip)); }

Clip load_clip(const std::filesystem::path& path) { return tensor_to_clip(load_tensor(path)); }

void save_corpus(const std::filesystem::path& path, const std::vector<Clip>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("save_corpus: empty corpus");
  const Shape shape = corpus.front().shape();
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(corpus.size()), static_cast<std::uint32_t>(shape.frames),
            static_cast<std::uint32_t>(shape.height), static_cast<std::uint32_t>(shape.width)};
  for (const Clip& c : corpus) {
    if (c.shape() != shape) throw std::invalid_argument("save_corpus: clips differ in shape");
    for (double v : c.values()) t.values.push_back(static_cast<float>(v));
  }
  save_tensor(path, t);
}

std::vector<Clip> load_corpus(const std::filesystem::path& path) {
  const RawTensor t = load_tensor(path);
  if (t.dims.size() != 4) throw TensorIoError(TensorIoErrorKind::BadRank, "NBT1: a corpus needs rank 4");
  const Shape shape{t.dims[1], t.dims[2], t.dims[3]};
  const std::size_t per = shape.frames * shape.height * shape.width;
  std::vector<Clip> corpus;
  for (std::size_t j = 0; j < t.dims[0]; ++j) {
    Clip c(shape);
    auto out = c.values();
    for (std::size_t i = 0; i < per; ++i) out[i] = t.values[j * per + i];
    corpus.push_back(std::move(c));
  }
  return corpus;
}

}  // namespace noisesearch
