#pragma once

// Switched-tier coupling of one ESC to one motor. Each call to step()
// advances one PWM period, splitting the plant integration at the PWM edge,
// at the comparator sample instant and at every commutation.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "hexastack/bldc/motor.hpp"
#include "hexastack/esc/firmware.hpp"

namespace hexastack::esc {

struct RigConfig {
  double vdc = 16.8;
  double max_substep = 5.0e-6;  // s
  double k_drag = 0.0;          // N*m per (rad/s)^2, propeller load
  double load_torque = 0.0;     // N*m, constant load
  bool record_sectors = false;
};

struct RigRecord {
  double t = 0.0;
  int sector = 0;
  double duty = 0.0;
  double floating_v = 0.0;
  bool zc_flag = false;
  double speed_est = 0.0;   // rpm
  double speed_true = 0.0;  // rpm
  double i_dc = 0.0;        // A, mean over the period
};

struct SectorRecord {
  double t_start = 0.0;  // commutation opening the sector
  double t_end = 0.0;    // commutation closing it
  std::optional<double> t_zc;
  double speed_true = 0.0;  // rpm at t_end
  double speed_est = 0.0;   // rpm
  int sector = 0;           // the sector being closed
  double theta_end = 0.0;   // true electrical angle at t_end, rad in [0, 2 pi)
  Mode mode = Mode::kIdle;
};

class EscMotorRig {
 public:
  EscMotorRig(EscConfig esc, bldc::MotorParams motor, RigConfig config = {});

  RigRecord step();
  /// Runs whole PWM periods covering `duration`, handing each record to `sink`.
  void run(double duration, const std::function<void(const RigRecord&)>& sink = {});

  EscFirmware& esc() { return esc_; }
  const EscFirmware& esc() const { return esc_; }
  const bldc::MotorState& motor() const { return motor_; }
  const bldc::MotorParams& motor_params() const { return params_; }
  RigConfig& config() { return config_; }
  double time() const;
  std::uint64_t periods() const { return period_; }
  const std::vector<SectorRecord>& sectors() const { return sectors_; }
  double speed_rpm() const { return bldc::rad_s_to_rpm(motor_.omega_mech); }

 private:
  void advance(double t_from, double t_to, const bldc::PhaseDrive& drive, double& charge);
  void execute_commutation(double t);

  EscFirmware esc_;
  bldc::MotorParams params_;
  RigConfig config_;
  bldc::MotorState motor_;
  std::optional<EscSample> pending_sample_;
  double last_floating_v_ = 0.0;
  std::uint64_t period_ = 0;
  std::vector<SectorRecord> sectors_;
  double t_sector_start_ = 0.0;
};

void write_bench_header(std::ostream& out);
void write_bench_row(std::ostream& out, const RigRecord& row);

}  // namespace hexastack::esc
