#pragma once

// Bit-exact frame layouts. See docs/frames.md for golden byte vectors.
//
// Command/reply frame:  [address][command][payload 0..4 bytes][crc8]
//   crc8 covers address, command and payload.
// IMU frame (28 bytes): [0xA5][seq lo][seq hi][6 x float32 LE][sum8]
//   sum8 is the byte sum of the first 27 bytes, modulo 256.

#include <cstdint>
#include <span>
#include <vector>

namespace hexastack::comm {

enum class Opcode : std::uint8_t {
  kSetSpeed = 0x01,
  kGetStatus = 0x02,
  kArm = 0x03,
  kDisarm = 0x04,
};

// Reply command byte: request opcode with the top bit set on success,
// kErrorReply (payload = one ErrorCode byte) otherwise.
inline constexpr std::uint8_t kAckBit = 0x80;
inline constexpr std::uint8_t kErrorReply = 0x7F;

enum class ErrorCode : std::uint8_t {
  kCrc = 0x01,
  kMalformedLength = 0x02,
  kUnknownCommand = 0x03,
  kWrongAddress = 0x04,
};

inline constexpr std::size_t kMaxPayload = 4;
inline constexpr std::size_t kMinFrameSize = 3;
inline constexpr std::size_t kMaxFrameSize = kMinFrameSize + kMaxPayload;

struct CommandFrame {
  std::uint8_t address = 1;  // 7-bit
  std::uint8_t command = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const CommandFrame&) const = default;
};

CommandFrame make_set_speed(std::uint8_t address, std::uint16_t rpm);
CommandFrame make_get_status(std::uint8_t address);
CommandFrame make_arm(std::uint8_t address);
CommandFrame make_disarm(std::uint8_t address);

/// Throws std::invalid_argument for an address above 0x7F or an oversized payload.
std::vector<std::uint8_t> encode_frame(const CommandFrame& frame);

/// Throws MalformedLength or CrcError.
CommandFrame decode_frame(std::span<const std::uint8_t> bytes);

std::uint16_t read_u16_le(std::span<const std::uint8_t> bytes, std::size_t offset);

struct StatusReply {
  std::uint16_t speed_rpm = 0;
  std::uint8_t duty = 0;  // duty * 255, rounded
  std::uint8_t flags = 0;

  bool operator==(const StatusReply&) const = default;
};

std::vector<std::uint8_t> encode_status(const StatusReply& status);
StatusReply decode_status(std::span<const std::uint8_t> payload);

struct ImuFrame {
  std::uint16_t sequence = 0;
  float roll = 0.0F;   // deg, (-180, 180]
  float pitch = 0.0F;  // deg
  float yaw = 0.0F;    // deg
  float p = 0.0F;      // deg/s, body rates
  float q = 0.0F;
  float r = 0.0F;

  bool operator==(const ImuFrame&) const = default;
};

inline constexpr std::uint8_t kImuSync = 0xA5;
inline constexpr std::size_t kImuFrameSize = 28;

/// Throws std::invalid_argument when an angle lies outside (-180, 180].
std::vector<std::uint8_t> encode_imu(const ImuFrame& frame);

/// Throws MalformedLength (size or sync) or CrcError (checksum).
ImuFrame decode_imu(std::span<const std::uint8_t> bytes);

std::uint8_t sum8(std::span<const std::uint8_t> bytes);

}  // namespace hexastack::comm
