#include "stressfield/bitmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "stressfield/errors.hpp"

namespace stressfield {

Rgb blue_red(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  const auto red = static_cast<std::uint8_t>(std::lround(255.0 * t));
  return {red, 0, static_cast<std::uint8_t>(255 - red)};
}

std::vector<std::uint8_t> encode_bmp(std::span<const double> field, int size,
                                     std::span<const std::uint8_t> mask) {
  const auto cells = static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
  if (size < 1 || field.size() != cells || (!mask.empty() && mask.size() != cells)) {
    throw ContractError("bitmap field and mask must hold size^2 entries");
  }
  auto shown = [&](std::size_t k) { return mask.empty() || mask[k] != 0; };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < cells; ++k) {
    if (!shown(k)) continue;
    lo = std::min(lo, field[k]);
    hi = std::max(hi, field[k]);
  }
  const double span = hi - lo;

  const std::uint32_t row_bytes = (3u * static_cast<std::uint32_t>(size) + 3u) & ~3u;
  const std::uint32_t image_bytes = row_bytes * static_cast<std::uint32_t>(size);
  std::vector<std::uint8_t> out(54 + image_bytes, 0);
  auto u16 = [&](std::size_t at, std::uint32_t v) {
    out[at] = static_cast<std::uint8_t>(v & 0xFF);
    out[at + 1] = static_cast<std::uint8_t>((v >> 8) & 0xFF);
  };
  auto u32 = [&](std::size_t at, std::uint32_t v) {
    u16(at, v & 0xFFFF);
    u16(at + 2, v >> 16);
  };
  out[0] = 'B';
  out[1] = 'M';
  u32(2, static_cast<std::uint32_t>(out.size()));
  u32(10, 54);
  u32(14, 40);
  u32(18, static_cast<std::uint32_t>(size));
  u32(22, static_cast<std::uint32_t>(size));
  u16(26, 1);
  u16(28, 24);
  u32(34, image_bytes);
  u32(38, 2835);  // 72 dpi
  u32(42, 2835);

  // BMP rows run bottom-up, which matches j = 0 at the bottom.
  for (int j = 0; j < size; ++j) {
    std::uint8_t* row = out.data() + 54 + static_cast<std::size_t>(j) * row_bytes;
    for (int i = 0; i < size; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * size + i;
      Rgb c{255, 255, 255};
      if (shown(k)) c = blue_red(span > 0.0 ? (field[k] - lo) / span : 0.5);
      row[3 * i] = c[2];
      row[3 * i + 1] = c[1];
      row[3 * i + 2] = c[0];
    }
  }
  return out;
}

void write_bmp(const std::filesystem::path& path, std::span<const double> field, int size,
               std::span<const std::uint8_t> mask) {
  const auto bytes = encode_bmp(field, size, mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace stressfield
