#pragma once

// Little-endian scalar I/O shared by the binary formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <type_traits>

#include "stressfield/errors.hpp"

namespace stressfield::detail {

template <class T>
using LeBits = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = LeBits<T>;
  auto bits = std::bit_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xFF);
    if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
  }
  out.write(bytes, sizeof(T));
}

template <class T>
T take(std::istream& in) {
  using U = LeBits<T>;
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("unexpected end of file");
  }
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits << 8);
    bits = static_cast<U>(bits | bytes[i]);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace stressfield::detail
