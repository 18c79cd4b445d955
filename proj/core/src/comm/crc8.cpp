#include "hexastack/comm/crc8.hpp"

#include <array>

namespace hexastack::comm {
namespace {

constexpr std::array<std::uint8_t, 256> make_table() {
  std::array<std::uint8_t, 256> table{};
  for (int n = 0; n < 256; ++n) {
    auto c = static_cast<std::uint8_t>(n);
    for (int bit = 0; bit < 8; ++bit) {
      c = (c & 0x80) ? static_cast<std::uint8_t>((c << 1) ^ 0x07) : static_cast<std::uint8_t>(c << 1);
    }
    table[static_cast<std::size_t>(n)] = c;
  }
  return table;
}

constexpr auto kTable = make_table();

}  // namespace

std::uint8_t crc8(std::span<const std::uint8_t> bytes) {
  std::uint8_t crc = 0x00;
  for (auto b : bytes) crc = kTable[crc ^ b];
  return crc;
}

}  // namespace hexastack::comm
