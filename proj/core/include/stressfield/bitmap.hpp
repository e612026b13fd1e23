#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stressfield {

using Rgb = std::array<std::uint8_t, 3>;

/// Linear blue (t = 0) to red (t = 1) map; t is clamped to [0, 1].
Rgb blue_red(double t);

/// Uncompressed 24-bit BMP of a G x G field (index j * G + i, j = 0 at the
/// bottom). Unmasked cells are colored over their own min/max; masked cells
/// are white. An empty mask means every cell is shown.
std::vector<std::uint8_t> encode_bmp(std::span<const double> field, int size,
                                     std::span<const std::uint8_t> mask = {});

void write_bmp(const std::filesystem::path& path, std::span<const double> field, int size,
               std::span<const std::uint8_t> mask = {});

}  // namespace stressfield
