#include "hseg/image.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hseg {

std::string to_string(const Rgb& c) {
  std::ostringstream os;
  os << '(' << int(c.r) << ',' << int(c.g) << ',' << int(c.b) << ')';
  return os.str();
}

Palette::Palette(std::vector<Entry> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2) throw std::invalid_argument("palette needs at least 2 classes");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name.empty()) throw std::invalid_argument("palette: empty class name");
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i].name == entries_[j].name)
        throw std::invalid_argument("palette: duplicate class name '" + entries_[i].name + "'");
      if (entries_[i].color == entries_[j].color)
        throw std::invalid_argument("palette: duplicate color " + to_string(entries_[i].color));
    }
  }
}

Palette Palette::standard() {
  return Palette({{"periphery", {0, 0, 0}},
                  {"page", {255, 255, 255}},
                  {"text", {0, 0, 255}},
                  {"decoration", {255, 0, 0}},
                  {"comment", {255, 0, 255}}});
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::uint8_t parse_channel(std::string_view s, int line_no) {
  s = trim(s);
  int v = -1;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v < 0 || v > 255)
    throw std::invalid_argument("palette line " + std::to_string(line_no) + ": bad channel '" +
                                std::string(s) + "'");
  return static_cast<std::uint8_t>(v);
}

}  // namespace

Palette Palette::parse(std::string_view text) {
  std::vector<Entry> entries;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("palette line " + std::to_string(line_no) + ": expected name=R,G,B");
    const auto name = trim(line.substr(0, eq));
    const auto rgb = line.substr(eq + 1);
    const auto c1 = rgb.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : rgb.find(',', c1 + 1);
    if (c2 == std::string_view::npos || rgb.find(',', c2 + 1) != std::string_view::npos)
      throw std::invalid_argument("palette line " + std::to_string(line_no) + ": expected name=R,G,B");
    entries.push_back({std::string(name),
                       {parse_channel(rgb.substr(0, c1), line_no),
                        parse_channel(rgb.substr(c1 + 1, c2 - c1 - 1), line_no),
                        parse_channel(rgb.substr(c2 + 1), line_no)}});
  }
  return Palette(std::move(entries));
}

Palette Palette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open palette " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Palette::to_text() const {
  std::ostringstream os;
  for (const auto& e : entries_)
    os << e.name << '=' << int(e.color.r) << ',' << int(e.color.g) << ',' << int(e.color.b) << '\n';
  return os.str();
}

std::optional<int> Palette::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> Palette::index_of(const Rgb& color) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].color == color) return static_cast<int>(i);
  return std::nullopt;
}

Palette Palette::prefix(int n) const {
  if (n < 2 || n > size()) throw std::invalid_argument("palette prefix out of range");
  return Palette(std::vector<Entry>(entries_.begin(), entries_.begin() + n));
}

GrayImage gray_from_raw(const RawImage& raw) {
  GrayImage img(raw.height, raw.width);
  const std::size_t n = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height);
  double* out = img.data();
  if (raw.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = raw.data[i] / 255.0;
  } else if (raw.channels == 3) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = &raw.data[3 * i];
      const double l = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
      out[i] = std::clamp(l, 0.0, 1.0);
    }
  } else {
    throw FormatError("unsupported channel count " + std::to_string(raw.channels));
  }
  return img;
}

GrayImage load_gray(const std::filesystem::path& path) { return gray_from_raw(read_png(path)); }

namespace {

void check_exponent(Index rows, Index cols, int exponent) {
  if (exponent < 0 || exponent > 30) throw std::invalid_argument("downscale: exponent must be in [0, 30]");
  if ((rows >> exponent) == 0 || (cols >> exponent) == 0)
    throw std::invalid_argument("downscale: " + std::to_string(cols) + "x" + std::to_string(rows) +
                                " image would vanish at scale 2^-" + std::to_string(exponent));
}

}  // namespace

GrayImage downscale(const GrayImage& img, int exponent) {
  check_exponent(img.rows(), img.cols(), exponent);
  if (exponent == 0) return img;
  const Index f = Index{1} << exponent;
  GrayImage out(img.rows() / f, img.cols() / f);
  const double norm = 1.0 / static_cast<double>(f * f);
  for (Index y = 0; y < out.rows(); ++y)
    for (Index x = 0; x < out.cols(); ++x)
      out(y, x) = img.block(y * f, x * f, f, f).sum() * norm;
  return out;
}

LabelImage downscale_labels(const LabelImage& labels, int exponent) {
  check_exponent(labels.rows(), labels.cols(), exponent);
  if (exponent == 0) return labels;
  const Index f = Index{1} << exponent;
  const int classes = labels.size() ? labels.maxCoeff() + 1 : 1;
  if (labels.size() && labels.minCoeff() < 0) throw std::invalid_argument("downscale_labels: negative label");
  LabelImage out(labels.rows() / f, labels.cols() / f);
  std::vector<int> votes(static_cast<std::size_t>(classes));
  for (Index y = 0; y < out.rows(); ++y)
    for (Index x = 0; x < out.cols(); ++x) {
      std::fill(votes.begin(), votes.end(), 0);
      for (Index v = 0; v < f; ++v)
        for (Index u = 0; u < f; ++u) ++votes[static_cast<std::size_t>(labels(y * f + v, x * f + u))];
      out(y, x) = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
  return out;
}

LabelImage labels_from_raw(const RawImage& raw, const Palette& palette) {
  LabelImage labels(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * raw.width + x;
      Rgb c;
      if (raw.channels == 3) {
        c = {raw.data[3 * i], raw.data[3 * i + 1], raw.data[3 * i + 2]};
      } else {
        c = {raw.data[i], raw.data[i], raw.data[i]};
      }
      const auto idx = palette.index_of(c);
      if (!idx)
        throw FormatError("label color " + to_string(c) + " at (" + std::to_string(x) + "," +
                          std::to_string(y) + ") is not in the palette");
      labels(y, x) = *idx;
    }
  return labels;
}

LabelImage load_labels(const std::filesystem::path& path, const Palette& palette) {
  try {
    return labels_from_raw(read_png(path), palette);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_labels(const LabelImage& labels, const Palette& palette, const std::filesystem::path& path) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(labels.size()) * 3);
  for (Index i = 0; i < labels.size(); ++i) {
    const int l = labels.data()[i];
    if (l < 0 || l >= palette.size())
      throw std::invalid_argument("write_labels: label " + std::to_string(l) + " outside palette of " +
                                  std::to_string(palette.size()) + " classes");
    const auto& c = palette[l].color;
    rgb[3 * i] = c.r;
    rgb[3 * i + 1] = c.g;
    rgb[3 * i + 2] = c.b;
  }
  write_png(path, static_cast<int>(labels.cols()), static_cast<int>(labels.rows()), 3, rgb);
}

void write_gray(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(img.size()));
  for (Index i = 0; i < img.size(); ++i)
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data()[i], 0.0, 1.0) * 255.0));
  write_png(path, static_cast<int>(img.cols()), static_cast<int>(img.rows()), 1, px);
}

bool is_valid_gray(const GrayImage& img) {
  return img.size() == 0 || (img.allFinite() && img.minCoeff() >= 0.0 && img.maxCoeff() <= 1.0);
}

}  // namespace hseg
