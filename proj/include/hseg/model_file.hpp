#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hseg/image.hpp"
#include "hseg/nn/network.hpp"

namespace hseg {

/// Binary model layout, all integers and floats little-endian:
///
///   "HSEG"  u32 version (=1)
///   u32 input_side  u32 depth  u32 kernels[depth]  u8 max_pool  u32 dense_width  u32 num_classes
///   u32 M  then per class: u32 name_length, name bytes, u8 r, u8 g, u8 b
///   per parameter tensor (conv kernels/biases per layer, hidden, output):
///     u32 count, count x float32
struct Model {
  nn::Network<double> network;
  Palette palette;
};

inline constexpr std::uint32_t kModelVersion = 1;

/// Parameters are rounded to float32; loading yields exactly those values.
std::vector<std::uint8_t> serialize_model(const nn::Network<double>& net, const Palette& palette);
Model deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const nn::Network<double>& net, const Palette& palette, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace hseg
