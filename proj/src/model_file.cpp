#include "hseg/model_file.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace hseg {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'E', 'G'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= std::uint32_t(bytes_[pos_++]) << s;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("model file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int checked_int(std::uint32_t v, std::uint32_t limit, const char* what) {
  if (v > limit) throw FormatError(std::string("model file: implausible ") + what + " " + std::to_string(v));
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const nn::Network<double>& net, const Palette& palette) {
  const auto& cfg = net.config();
  if (palette.size() != cfg.num_classes)
    throw std::invalid_argument("model has " + std::to_string(cfg.num_classes) + " classes but palette has " +
                                std::to_string(palette.size()));
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(cfg.input_side));
  w.u32(static_cast<std::uint32_t>(cfg.depth()));
  for (int k : cfg.conv_kernel_counts) w.u32(static_cast<std::uint32_t>(k));
  w.u8(cfg.use_max_pool ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(cfg.dense_width));
  w.u32(static_cast<std::uint32_t>(cfg.num_classes));
  w.u32(static_cast<std::uint32_t>(palette.size()));
  for (const auto& e : palette.entries()) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(e.color.r);
    w.u8(e.color.g);
    w.u8(e.color.b);
  }
  for (const auto* t : net.parameters().tensors()) {
    w.u32(static_cast<std::uint32_t>(t->size()));
    for (Index i = 0; i < t->size(); ++i) w.f32(static_cast<float>((*t)[i]));
  }
  return w.take();
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw FormatError("not a model file (bad magic)");
  if (const auto v = r.u32(); v != kModelVersion) throw FormatError("unsupported model version " + std::to_string(v));
  nn::NetworkConfig cfg;
  cfg.input_side = checked_int(r.u32(), 1 << 16, "input side");
  const int depth = checked_int(r.u32(), 64, "depth");
  cfg.conv_kernel_counts.clear();
  for (int d = 0; d < depth; ++d) cfg.conv_kernel_counts.push_back(checked_int(r.u32(), 1 << 16, "kernel count"));
  cfg.use_max_pool = r.u8() != 0;
  cfg.dense_width = checked_int(r.u32(), 1 << 20, "dense width");
  cfg.num_classes = checked_int(r.u32(), 1 << 16, "class count");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }

  const int m = checked_int(r.u32(), 1 << 16, "palette size");
  std::vector<Palette::Entry> entries;
  for (int i = 0; i < m; ++i) {
    const auto len = r.u32();
    if (len > 4096) throw FormatError("model file: implausible class name length");
    Palette::Entry e;
    e.name = r.str(len);
    e.color.r = r.u8();
    e.color.g = r.u8();
    e.color.b = r.u8();
    entries.push_back(std::move(e));
  }
  Palette palette(std::move(entries));
  if (palette.size() != cfg.num_classes) throw FormatError("model file: palette size does not match class count");

  auto params = nn::Parameters<double>::zeros(cfg);
  for (auto* t : params.tensors()) {
    if (r.u32() != static_cast<std::uint32_t>(t->size())) throw FormatError("model file: parameter block size mismatch");
    for (Index i = 0; i < t->size(); ++i) (*t)[i] = static_cast<double>(r.f32());
    if (!t->all_finite()) throw FormatError("model file: non-finite parameter");
  }
  if (!r.done()) throw FormatError("model file: trailing bytes");
  return {nn::Network<double>(cfg, std::move(params)), std::move(palette)};
}

void save_model(const nn::Network<double>& net, const Palette& palette, const std::filesystem::path& path) {
  const auto bytes = serialize_model(net, palette);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace hseg
