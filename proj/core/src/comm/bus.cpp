#include "hexastack/comm/bus.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::comm {

double transaction_time(std::size_t request_bytes, std::size_t reply_read_bytes,
                        const BusConfig& config) {
  if (config.bit_rate <= 0.0) return 0.0;
  double bits = static_cast<double>(1 + request_bytes) * 9.0 + 2.0;
  if (reply_read_bytes > 0) bits += static_cast<double>(1 + reply_read_bytes) * 9.0 + 1.0;
  return bits / config.bit_rate;
}

std::size_t reply_read_bytes(std::uint8_t opcode) {
  // GET_STATUS: address, command, 4-byte status, crc.
  return opcode == static_cast<std::uint8_t>(Opcode::kGetStatus) ? 7 : 0;
}

CommandBus::CommandBus(BusConfig config) : config_(config) {
  if (config_.bit_rate < 0.0) throw std::invalid_argument("bus bit_rate must be >= 0");
}

void CommandBus::attach(std::uint8_t address, BusSlave* slave) {
  if (address == 0 || address > 0x7F) throw std::invalid_argument("bus address must be 1..127");
  slaves_[address] = slave;
}

bool CommandBus::busy(double t_now) const { return pending_.has_value() || t_now < busy_until_; }

double CommandBus::submit(std::vector<std::uint8_t> request, double t_now) {
  if (busy(t_now)) {
    throw BusBusy("bus busy until t=" + std::to_string(busy_until_) + ", submit at t=" +
                  std::to_string(t_now));
  }
  if (request.size() < kMinFrameSize) throw MalformedLength("bus request shorter than 3 bytes");
  const std::uint8_t address = request[0];
  if (!slaves_.contains(address)) {
    throw NoAckError("no slave acknowledged address " + std::to_string(address));
  }
  const double dt = transaction_time(request.size(), reply_read_bytes(request[1]), config_);
  Delivery d;
  d.address = address;
  d.t_submit = t_now;
  d.t_complete = t_now + dt;
  d.request = std::move(request);
  pending_ = std::move(d);
  busy_until_ = pending_->t_complete;
  return busy_until_;
}

std::optional<Delivery> CommandBus::poll(double t_now) {
  if (!pending_ || t_now < pending_->t_complete) return std::nullopt;
  Delivery d = std::move(*pending_);
  pending_.reset();
  d.reply = slaves_.at(d.address)->handle_frame(d.request);
  ++completed_;
  return d;
}

Delivery CommandBus::transact(std::vector<std::uint8_t> request, double t_now) {
  const double done = submit(std::move(request), t_now);
  return *poll(done);
}

ImuLink::ImuLink(UartConfig config) : config_(config) {
  if (!(config_.baud > 0.0)) throw std::invalid_argument("uart baud must be > 0");
}

double ImuLink::frame_time(std::size_t bytes) const {
  return static_cast<double>(bytes) * 10.0 / config_.baud;
}

double ImuLink::send(std::vector<std::uint8_t> bytes, double t_now) {
  const double start = std::max(t_now, line_free_);
  line_free_ = start + frame_time(bytes.size());
  queue_.push_back({line_free_, std::move(bytes)});
  return line_free_;
}

std::vector<ImuDelivery> ImuLink::poll(double t_now) {
  std::vector<ImuDelivery> out;
  while (!queue_.empty() && queue_.front().t_arrive <= t_now) {
    const InFlight item = std::move(queue_.front());
    queue_.pop_front();
    try {
      out.push_back({item.t_arrive, decode_imu(item.bytes)});
      ++delivered_;
    } catch (const Error&) {
      ++dropped_;
    }
  }
  return out;
}

}  // namespace hexastack::comm
