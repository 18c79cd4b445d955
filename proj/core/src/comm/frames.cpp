#include "hexastack/comm/frames.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "hexastack/comm/crc8.hpp"
#include "hexastack/errors.hpp"

namespace hexastack::comm {
namespace {

void put_f32(std::vector<std::uint8_t>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) {
    bits |= static_cast<std::uint32_t>(bytes[offset + static_cast<std::size_t>(k)]) << (8 * k);
  }
  return std::bit_cast<float>(bits);
}

void check_angle(float deg, const char* name) {
  if (!(deg > -180.0F && deg <= 180.0F)) {
    throw std::invalid_argument(std::string("imu frame: ") + name + " outside (-180, 180]");
  }
}

}  // namespace

CommandFrame make_set_speed(std::uint8_t address, std::uint16_t rpm) {
  return {address, static_cast<std::uint8_t>(Opcode::kSetSpeed),
          {static_cast<std::uint8_t>(rpm & 0xFF), static_cast<std::uint8_t>(rpm >> 8)}};
}

CommandFrame make_get_status(std::uint8_t address) {
  return {address, static_cast<std::uint8_t>(Opcode::kGetStatus), {}};
}

CommandFrame make_arm(std::uint8_t address) {
  return {address, static_cast<std::uint8_t>(Opcode::kArm), {}};
}

CommandFrame make_disarm(std::uint8_t address) {
  return {address, static_cast<std::uint8_t>(Opcode::kDisarm), {}};
}

std::vector<std::uint8_t> encode_frame(const CommandFrame& frame) {
  if (frame.address > 0x7F) throw std::invalid_argument("frame address must be 7-bit");
  if (frame.payload.size() > kMaxPayload) {
    throw std::invalid_argument("frame payload exceeds 4 bytes");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kMinFrameSize + frame.payload.size());
  out.push_back(frame.address);
  out.push_back(frame.command);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  out.push_back(crc8(out));
  return out;
}

CommandFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMinFrameSize || bytes.size() > kMaxFrameSize) {
    throw MalformedLength("frame length " + std::to_string(bytes.size()) + " outside [3, 7]");
  }
  const auto body = bytes.first(bytes.size() - 1);
  if (crc8(body) != bytes.back()) throw CrcError("frame crc mismatch");
  if (bytes[0] > 0x7F) throw MalformedLength("frame address is not 7-bit");
  CommandFrame frame;
  frame.address = bytes[0];
  frame.command = bytes[1];
  frame.payload.assign(body.begin() + 2, body.end());
  return frame;
}

std::uint16_t read_u16_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return static_cast<std::uint16_t>(bytes[offset] | (bytes[offset + 1] << 8));
}

std::vector<std::uint8_t> encode_status(const StatusReply& status) {
  return {static_cast<std::uint8_t>(status.speed_rpm & 0xFF),
          static_cast<std::uint8_t>(status.speed_rpm >> 8), status.duty, status.flags};
}

StatusReply decode_status(std::span<const std::uint8_t> payload) {
  if (payload.size() != 4) throw MalformedLength("status payload must be 4 bytes");
  return {read_u16_le(payload, 0), payload[2], payload[3]};
}

std::uint8_t sum8(std::span<const std::uint8_t> bytes) {
  unsigned sum = 0;
  for (auto b : bytes) sum += b;
  return static_cast<std::uint8_t>(sum & 0xFF);
}

std::vector<std::uint8_t> encode_imu(const ImuFrame& frame) {
  check_angle(frame.roll, "roll");
  check_angle(frame.pitch, "pitch");
  check_angle(frame.yaw, "yaw");
  std::vector<std::uint8_t> out;
  out.reserve(kImuFrameSize);
  out.push_back(kImuSync);
  out.push_back(static_cast<std::uint8_t>(frame.sequence & 0xFF));
  out.push_back(static_cast<std::uint8_t>(frame.sequence >> 8));
  for (float v : {frame.roll, frame.pitch, frame.yaw, frame.p, frame.q, frame.r}) put_f32(out, v);
  out.push_back(sum8(out));
  return out;
}

ImuFrame decode_imu(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kImuFrameSize) {
    throw MalformedLength("imu frame length " + std::to_string(bytes.size()) + " != 28");
  }
  if (bytes[0] != kImuSync) throw MalformedLength("imu frame sync byte missing");
  if (sum8(bytes.first(kImuFrameSize - 1)) != bytes.back()) {
    throw CrcError("imu frame checksum mismatch");
  }
  ImuFrame f;
  f.sequence = read_u16_le(bytes, 1);
  f.roll = get_f32(bytes, 3);
  f.pitch = get_f32(bytes, 7);
  f.yaw = get_f32(bytes, 11);
  f.p = get_f32(bytes, 15);
  f.q = get_f32(bytes, 19);
  f.r = get_f32(bytes, 23);
  return f;
}

}  // namespace hexastack::comm
