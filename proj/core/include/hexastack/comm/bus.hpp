#pragma once

// Transaction-level model of the master/slave command bus and of the UART
// that carries IMU frames. Neither model resolves individual bits; both
// compute delivery times from byte counts.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hexastack/comm/frames.hpp"

namespace hexastack::comm {

class BusSlave {
 public:
  virtual ~BusSlave() = default;
  /// Consumes one request frame and returns the encoded reply frame.
  virtual std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> request) = 0;
};

struct BusConfig {
  double bit_rate = 400000.0;  // Hz; 0 gives an ideal zero-latency bus
};

/// Bus time of one transaction. Each on-wire byte costs 9 bit slots (8 data
/// plus ACK) and every segment is preceded by a one-byte address header.
/// A write costs START + STOP; a read-back adds a repeated START.
double transaction_time(std::size_t request_bytes, std::size_t reply_read_bytes,
                        const BusConfig& config);

/// Number of reply bytes the master clocks back for a request opcode.
std::size_t reply_read_bytes(std::uint8_t opcode);

struct Delivery {
  std::uint8_t address = 0;
  double t_submit = 0.0;
  double t_complete = 0.0;
  std::vector<std::uint8_t> request;
  std::vector<std::uint8_t> reply;
};

class CommandBus {
 public:
  explicit CommandBus(BusConfig config = {});

  void attach(std::uint8_t address, BusSlave* slave);

  /// Starts a transaction. Throws BusBusy when another one is still in
  /// flight, NoAckError for an unassigned address and MalformedLength for a
  /// frame too short to carry an address. Returns the completion time.
  double submit(std::vector<std::uint8_t> request, double t_now);

  /// Completes the in-flight transaction if it is due at t_now. The slave
  /// sees the frame at the completion time, never earlier.
  std::optional<Delivery> poll(double t_now);

  /// submit followed by poll at the completion time.
  Delivery transact(std::vector<std::uint8_t> request, double t_now);

  bool busy(double t_now) const;
  double busy_until() const { return busy_until_; }
  std::size_t in_flight() const { return pending_ ? 1 : 0; }
  std::uint64_t completed() const { return completed_; }
  const BusConfig& config() const { return config_; }

 private:
  BusConfig config_;
  std::map<std::uint8_t, BusSlave*> slaves_;
  std::optional<Delivery> pending_;
  double busy_until_ = -1.0;
  std::uint64_t completed_ = 0;
};

struct UartConfig {
  double baud = 115200.0;  // 10 bit times per byte (start, 8 data, stop)
};

struct ImuDelivery {
  double t_delivered = 0.0;
  ImuFrame frame;
};

/// In-order serial link. Frames queue behind one another on the line; a
/// frame failing its checksum is dropped and counted.
class ImuLink {
 public:
  explicit ImuLink(UartConfig config = {});

  /// Returns the time the last byte arrives.
  double send(std::vector<std::uint8_t> bytes, double t_now);
  std::vector<ImuDelivery> poll(double t_now);

  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t delivered() const { return delivered_; }
  double frame_time(std::size_t bytes) const;

 private:
  struct InFlight {
    double t_arrive;
    std::vector<std::uint8_t> bytes;
  };
  UartConfig config_;
  std::deque<InFlight> queue_;
  double line_free_ = 0.0;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace hexastack::comm
