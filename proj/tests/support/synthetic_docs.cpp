#include "synthetic_docs.hpp"

#include <algorithm>
#include <cstdio>

#include "hseg/rng.hpp"

namespace hseg::testing {

Palette synthetic_palette() { return Palette::standard().prefix(3); }

SyntheticDoc make_synthetic_doc(std::uint64_t seed, int side) {
  SplitMix64 rng(seed);
  SyntheticDoc doc;
  doc.image.resize(side, side);
  doc.labels.resize(side, side);

  auto border = [&] { return static_cast<int>(side / 16 + rng.below(static_cast<std::uint64_t>(side / 16))); };
  const int top = border(), bottom = side - border(), left = border(), right = side - border();

  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const bool page = y >= top && y < bottom && x >= left && x < right;
      doc.labels(y, x) = page ? 1 : 0;
      doc.image(y, x) = page ? rng.uniform(0.82, 0.92) : rng.uniform(0.05, 0.20);
    }

  // Text block: lines of dark strokes with short gaps, 3 px high every 6 px.
  const int page_w = right - left, page_h = bottom - top;
  const int tw = page_w / 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(page_w / 4)));
  const int th = page_h / 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(page_h / 4)));
  const int tx = left + 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, page_w - tw - 16))));
  const int ty = top + 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, page_h - th - 16))));
  constexpr int kLineHeight = 3, kLinePitch = 6;
  const int lines = (th - kLineHeight) / kLinePitch + 1;
  const int text_bottom = ty + (lines - 1) * kLinePitch + kLineHeight;

  for (int y = ty; y < text_bottom; ++y)
    for (int x = tx; x < tx + tw; ++x) doc.labels(y, x) = 2;
  for (int l = 0; l < lines; ++l) {
    const int y0 = ty + l * kLinePitch;
    int x = tx;
    while (x < tx + tw) {
      const int len = 2 + static_cast<int>(rng.below(7));
      for (int i = x; i < std::min(x + len, tx + tw); ++i)
        for (int y = y0; y < y0 + kLineHeight; ++y) doc.image(y, i) = rng.uniform(0.10, 0.30);
      x += len + 1 + static_cast<int>(rng.below(3));
    }
  }
  return doc;
}

void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t first_seed, int count, int side) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  const auto palette = synthetic_palette();
  for (int i = 0; i < count; ++i) {
    const auto doc = make_synthetic_doc(first_seed + static_cast<std::uint64_t>(i), side);
    char name[32];
    std::snprintf(name, sizeof name, "doc%02d.png", i);
    write_gray(doc.image, dir / "images" / name);
    write_labels(doc.labels, palette, dir / "labels" / name);
  }
}

}  // namespace hseg::testing
