#pragma once

#include <cstdint>
#include <span>

namespace hexastack::comm {

/// CRC-8, polynomial 0x07, initial value 0x00, no reflection, no final xor.
std::uint8_t crc8(std::span<const std::uint8_t> bytes);

}  // namespace hexastack::comm
