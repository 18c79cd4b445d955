#include "hexastack/esc/firmware.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hexastack/comm/frames.hpp"
#include "hexastack/errors.hpp"

namespace hexastack::esc {

using comm::ErrorCode;
using comm::Opcode;

void EscConfig::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw ValidationError(std::string("esc.") + key + ": " + why);
  };
  if (address < 1 || address > 6) fail("address", "must be 1..6");
  if (!(pwm_frequency > 0.0)) fail("pwm_frequency", "must be > 0");
  if (speed_loop_divisor < 1) fail("speed_loop_divisor", "must be >= 1");
  if (majority_window < 1 || majority_window % 2 == 0) fail("majority_window", "must be odd");
  if (!(kp >= 0.0)) fail("kp", "must be >= 0");
  if (!(ki >= 0.0)) fail("ki", "must be >= 0");
  if (!(align_duty >= 0.0 && align_duty <= 1.0)) fail("align_duty", "must be in [0, 1]");
  if (!(align_time >= 0.0)) fail("align_time", "must be >= 0");
  if (!(ramp_start_rate > 0.0)) fail("ramp_start_rate", "must be > 0");
  if (!(ramp_end_rate >= ramp_start_rate)) fail("ramp_end_rate", "must be >= ramp_start_rate");
  if (!(ramp_time > 0.0)) fail("ramp_time", "must be > 0");
  if (!(startup_timeout > 0.0)) fail("startup_timeout", "must be > 0");
  if (!(min_closed_loop_rpm > 0.0)) fail("min_closed_loop_rpm", "must be > 0");
  if (handoff_sectors < 1) fail("handoff_sectors", "must be >= 1");
  if (!(current_limit > 0.0)) fail("current_limit", "must be > 0");
}

EscFirmware::EscFirmware(EscConfig config, bldc::MotorParams motor)
    : config_(config), motor_(motor) {
  config_.validate();
  motor_.validate();
  state_.pi.kp = config_.kp;
  state_.pi.ki = config_.ki;
}

std::uint8_t EscFirmware::status_flags() const {
  std::uint8_t flags = faults_;
  if (armed_) flags |= kFlagArmed;
  if (state_.mode == Mode::kClosedLoop) flags |= kFlagClosedLoop;
  if (underspeed_) flags |= kFlagUnderspeed;
  return flags;
}

void EscFirmware::arm() {
  if (!armed_) faults_ = 0;
  armed_ = true;
}

void EscFirmware::disarm() {
  armed_ = false;
  state_.target_speed = 0.0;
  stop();
}

void EscFirmware::latch_fault(std::uint8_t fault) {
  faults_ |= static_cast<std::uint8_t>(fault & kFaultMask);
  stop();
}

bldc::PhaseDrive EscFirmware::drive(double vdc) const {
  bldc::PhaseDrive d = bldc::PhaseDrive::all_float(vdc);
  d.pwm_frequency = config_.pwm_frequency;
  if (state_.mode == Mode::kIdle || faults_ != 0) return d;
  d.connection = commutation_table(state_.sector);
  d.duty = state_.duty;
  return d;
}

void EscFirmware::stop() {
  const PIState pi = state_.pi;
  const double target = state_.target_speed;
  const int sector = state_.sector;
  state_ = CommutationState{};
  state_.pi = pi;
  state_.pi.integrator = 0.0;
  state_.target_speed = target;
  state_.sector = sector;
  pi_active_ = false;
  reset_detector();
}

void EscFirmware::reset_detector() {
  state_.zc_filter_window.clear();
  state_.t_zero_cross.reset();
  detected_in_sector_ = false;
  have_below_ = false;
  have_above_ = false;
}

double EscFirmware::ramp_rate(double t_now) const {
  const double x = std::clamp((t_now - t_mode_start_) / config_.ramp_time, 0.0, 1.0);
  return config_.ramp_start_rate * std::pow(config_.ramp_end_rate / config_.ramp_start_rate, x);
}

double EscFirmware::ramp_duty(double t_now, double vdc) const {
  const double omega = bldc::kTwoPi * ramp_rate(t_now) / (6.0 * motor_.pole_pairs);
  return std::clamp(config_.ramp_boost + motor_.kt * omega / vdc, 0.0, 1.0);
}

std::pair<double, double> EscFirmware::duty_bounds(double vdc) const {
  // Mean line current (D vdc - kt omega) / 2R, peak-to-peak PWM ripple
  // vdc D (1 - D) T / 2L. Both peaks are monotone in D.
  const double e = motor_.kt * bldc::rpm_to_rad_s(state_.speed_estimate);
  const double two_r = 2.0 * motor_.r_phase;
  const double ripple_gain = vdc / (config_.pwm_frequency * 4.0 * motor_.l_phase);
  const double limit = config_.current_limit;
  auto peak_high = [&](double d) { return (d * vdc - e) / two_r + ripple_gain * d * (1.0 - d); };
  auto peak_low = [&](double d) { return (d * vdc - e) / two_r - ripple_gain * d * (1.0 - d); };
  auto solve = [](auto f, double target) {
    double a = 0.0;
    double b = 1.0;
    if (f(a) >= target) return a;
    if (f(b) <= target) return b;
    for (int k = 0; k < 40; ++k) {
      const double m = 0.5 * (a + b);
      (f(m) <= target ? a : b) = m;
    }
    return a;
  };
  const double hi = solve(peak_high, limit);
  const double lo = std::min(solve(peak_low, -limit), hi);
  return {lo, hi};
}

void EscFirmware::start(double t_now, double vdc) {
  if (!(vdc >= config_.min_vdc)) {
    latch_fault(kFaultStartup);
    return;
  }
  state_.mode = Mode::kAlign;
  state_.sector = aligned_sector_;
  state_.duty = config_.align_duty;
  state_.t_last_commutation = t_now;
  state_.t_next_commutation.reset();
  t_startup_begin_ = t_now;
  t_mode_start_ = t_now;
  consecutive_zc_sectors_ = 0;
  reset_detector();
}

void EscFirmware::run_startup(double t_now, double vdc) {
  if (t_now - t_startup_begin_ > config_.startup_timeout) {
    latch_fault(kFaultStartup);
    return;
  }
  if (!(vdc >= config_.min_vdc)) {
    latch_fault(kFaultStartup);
    return;
  }
  if (state_.mode == Mode::kAlign) {
    if (t_now - t_mode_start_ < config_.align_time) return;
    // The rotor rests on the aligned sector's torque null; two sectors on
    // the drive pulls it forward with full torque.
    state_.mode = Mode::kOpenLoopRamp;
    t_mode_start_ = t_now;
    state_.sector = sector_after_align(aligned_sector_);
    state_.t_last_commutation = t_now;
    state_.t_next_commutation = t_now + 1.0 / ramp_rate(t_now);
    reset_detector();
  }
  state_.duty = ramp_duty(t_now, vdc);
}

void EscFirmware::tick(double t_now, const std::optional<EscSample>& sample, double vdc) {
  ++ticks_;
  zc_flag_ = false;
  if (faults_ != 0 || !armed_ || state_.target_speed <= 0.0) {
    underspeed_ = false;
    if (state_.mode != Mode::kIdle) stop();
    return;
  }
  if (state_.target_speed < config_.min_closed_loop_rpm) {
    underspeed_ = true;
    if (state_.mode != Mode::kIdle) stop();
    return;
  }
  underspeed_ = false;

  if (state_.mode == Mode::kIdle) {
    start(t_now, vdc);
    return;
  }
  if (state_.mode != Mode::kClosedLoop) {
    run_startup(t_now, vdc);
    if (faults_ != 0) return;
  }
  if (sample && state_.mode != Mode::kAlign) detect(*sample);

  if (state_.mode == Mode::kClosedLoop) {
    // A sector that runs past two expected sector lengths lost its crossing.
    const double expected = std::max(4.0 * state_.last_half_interval, 2.0 / config_.ramp_end_rate);
    if (!detected_in_sector_ && t_now - state_.t_last_commutation > expected) {
      ++diag_.missed_crossings;
      clean_crossings_ = 0;
      if (++missed_in_row_ > config_.max_missed_crossings) {
        latch_fault(kFaultDesync);
        return;
      }
      commutate(t_now);
    }
    if (!pi_active_ && clean_crossings_ >= config_.settle_crossings) {
      pi_active_ = true;
      state_.pi.integrator = state_.duty;
    }
    if (pi_active_ && ticks_ % static_cast<std::uint64_t>(config_.speed_loop_divisor) == 0) {
      const double dt = config_.speed_loop_divisor / config_.pwm_frequency;
      const auto out = pi_speed_update(state_.pi, state_.target_speed, state_.speed_estimate, dt);
      const auto [lo, hi] = duty_bounds(vdc);
      state_.pi = out.pi;
      state_.pi.integrator = std::clamp(out.pi.integrator, lo, hi);
      state_.duty = std::clamp(out.duty, lo, hi);
    }
  }
}

void EscFirmware::detect(const EscSample& sample) {
  if (sample.sector != state_.sector || sample.t <= state_.t_last_commutation) return;
  if (detected_in_sector_ || state_.duty <= 0.0) return;

  const bool rising = floating_rises(state_.sector);
  const bool crossed = sample_comparator(sample.floating_voltage, sample.vdc, rising);
  auto& window = state_.zc_filter_window;
  window.push_back(crossed);
  if (window.size() > static_cast<std::size_t>(config_.majority_window)) {
    window.erase(window.begin());
  }
  if (!crossed) {
    have_below_ = true;
    t_below_ = sample.t;
    v_below_ = sample.floating_voltage;
    have_above_ = false;
  } else if (!have_above_) {
    have_above_ = true;
    t_above_ = sample.t;
    v_above_ = sample.floating_voltage;
  }
  if (window.size() < static_cast<std::size_t>(config_.majority_window)) return;
  if (!majority_filter(window) || !have_above_) return;

  double t_zc = t_above_;
  const bool clean = have_below_;
  if (clean && v_above_ != v_below_) {
    const double frac = (0.5 * sample.vdc - v_below_) / (v_above_ - v_below_);
    t_zc = t_below_ + std::clamp(frac, 0.0, 1.0) * (t_above_ - t_below_);
  }
  zc_flag_ = true;
  on_detection(t_zc, clean);
}

void EscFirmware::on_detection(double t_zc, bool clean) {
  detected_in_sector_ = true;
  ++diag_.zero_crossings;
  if (!clean) ++diag_.early_crossings;

  if (state_.mode == Mode::kOpenLoopRamp) {
    state_.t_zero_cross = t_zc;
    if (consecutive_zc_sectors_ + 1 >= config_.handoff_sectors) handoff(t_zc);
    return;
  }
  if (state_.t_zero_cross) {
    ++diag_.spurious_crossings;
    return;
  }
  state_ = on_zero_cross(state_, t_zc, motor_.pole_pairs);
  missed_in_row_ = 0;
  clean_crossings_ = clean ? clean_crossings_ + 1 : 0;
}

void EscFirmware::handoff(double t_zc) {
  const double sector_period = 1.0 / ramp_rate(t_zc);
  state_.mode = Mode::kClosedLoop;
  state_.t_zero_cross = t_zc;
  state_.t_next_commutation = t_zc + 0.5 * sector_period;
  state_.last_half_interval = 0.5 * sector_period;
  state_.speed_estimate = rpm_from_sector_period(sector_period, motor_.pole_pairs);
  state_.pi.integrator = state_.duty;
  clean_crossings_ = 0;
  missed_in_row_ = 0;
  pi_active_ = false;
  diag_.t_closed_loop = t_zc;
}

void EscFirmware::commutate(double t) {
  if (state_.mode == Mode::kIdle || state_.mode == Mode::kAlign) {
    state_.t_next_commutation.reset();
    return;
  }
  if (state_.mode == Mode::kOpenLoopRamp) {
    consecutive_zc_sectors_ = detected_in_sector_ ? consecutive_zc_sectors_ + 1 : 0;
  }
  state_.sector = (state_.sector + 1) % 6;
  state_.t_last_commutation = t;
  state_.t_next_commutation.reset();
  if (state_.mode == Mode::kOpenLoopRamp) state_.t_next_commutation = t + 1.0 / ramp_rate(t);
  reset_detector();
  ++diag_.commutations;
}

std::vector<std::uint8_t> EscFirmware::reply(std::uint8_t command,
                                             std::vector<std::uint8_t> payload) const {
  return comm::encode_frame({config_.address, command, std::move(payload)});
}

std::vector<std::uint8_t> EscFirmware::error_reply(ErrorCode code) const {
  return reply(comm::kErrorReply, {static_cast<std::uint8_t>(code)});
}

std::vector<std::uint8_t> EscFirmware::handle_frame(std::span<const std::uint8_t> request) {
  comm::CommandFrame frame;
  try {
    frame = comm::decode_frame(request);
  } catch (const CrcError&) {
    return error_reply(ErrorCode::kCrc);
  } catch (const MalformedLength&) {
    return error_reply(ErrorCode::kMalformedLength);
  }
  if (frame.address != config_.address) return error_reply(ErrorCode::kWrongAddress);

  const auto ack = static_cast<std::uint8_t>(frame.command | comm::kAckBit);
  switch (static_cast<Opcode>(frame.command)) {
    case Opcode::kSetSpeed:
      if (frame.payload.size() != 2) return error_reply(ErrorCode::kMalformedLength);
      state_.target_speed = comm::read_u16_le(frame.payload, 0);
      return reply(ack, {});
    case Opcode::kGetStatus: {
      if (!frame.payload.empty()) return error_reply(ErrorCode::kMalformedLength);
      comm::StatusReply status;
      status.speed_rpm = static_cast<std::uint16_t>(
          std::clamp(std::lround(state_.speed_estimate), 0L, 65535L));
      status.duty = static_cast<std::uint8_t>(std::lround(state_.duty * 255.0));
      status.flags = status_flags();
      return reply(ack, comm::encode_status(status));
    }
    case Opcode::kArm:
      if (!frame.payload.empty()) return error_reply(ErrorCode::kMalformedLength);
      arm();
      return reply(ack, {});
    case Opcode::kDisarm:
      if (!frame.payload.empty()) return error_reply(ErrorCode::kMalformedLength);
      disarm();
      return reply(ack, {});
  }
  return error_reply(ErrorCode::kUnknownCommand);
}

}  // namespace hexastack::esc
