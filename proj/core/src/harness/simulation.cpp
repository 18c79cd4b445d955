#include "hexastack/harness/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "hexastack/errors.hpp"

namespace hexastack::harness {
namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

int divisor(double rate_hz) { return std::max(1, static_cast<int>(std::lround(1.0 / (rate_hz * kTick)))); }

// IMU frames carry float angles in (-180, 180].
float frame_angle(double deg) {
  const auto f = static_cast<float>(deg);
  return f <= -180.0F ? 180.0F : f;
}

double axis_angle(const flight::AttitudeState& a, flight::Axis axis) {
  switch (axis) {
    case flight::Axis::kRoll: return a.roll;
    case flight::Axis::kPitch: return a.pitch;
    case flight::Axis::kYaw: return a.yaw;
  }
  return 0.0;
}

}  // namespace

const char* to_string(FlightPhase phase) {
  switch (phase) {
    case FlightPhase::kGround: return "ground";
    case FlightPhase::kClimb: return "climb";
    case FlightPhase::kBrake: return "brake";
    case FlightPhase::kHold: return "hold";
    case FlightPhase::kDescend: return "descend";
    case FlightPhase::kArrest: return "arrest";
    case FlightPhase::kLand: return "land";
    case FlightPhase::kLanded: return "landed";
  }
  return "?";
}

Simulation::Simulation(SimConfig config, Scenario scenario, RunOptions options)
    : config_(std::move(config)),
      scenario_(std::move(scenario)),
      tier_(options.fidelity.value_or(scenario_.fidelity)),
      seed_(options.seed.value_or(scenario_.seed)),
      synth_(config_.sensors, seed_),
      bus_(config_.bus),
      imu_link_(config_.uart),
      controller_([&] {
        config_.validate();
        scenario_.validate();
        auto fc = config_.flight;
        fc.hover_rpm = config_.hover_rpm(scenario_.payload_kg);
        return fc;
      }()),
      imu_div_(divisor(config_.imu_rate_hz)),
      ctrl_div_(divisor(config_.flight.rate_hz)),
      gps_div_(divisor(config_.gps_rate_hz)) {
  vehicle_ = config_.vehicle;
  vehicle_.payload = scenario_.payload_kg;
  vehicle_.validate();
  hover_rpm_ = config_.hover_rpm(scenario_.payload_kg);
  battery_ = config_.battery;
  battery_.energy_wh = battery_.capacity_wh;

  for (int i = 0; i < airframe::kMotors; ++i) {
    const std::uint8_t address = config_.flight.addresses[static_cast<std::size_t>(i)];
    if (tier_ == bldc::Tier::kSwitched) {
      auto esc = config_.esc;
      esc.address = address;
      units_.push_back(std::make_unique<airframe::SwitchedEsc>(esc, config_.motor, config_.propulsion,
                                                               battery_.voltage));
    } else {
      airframe::AveragedEscConfig ac;
      ac.address = address;
      ac.vdc = battery_.voltage;
      ac.min_closed_loop_rpm = config_.esc.min_closed_loop_rpm;
      ac.current_limit = config_.esc.current_limit;
      units_.push_back(std::make_unique<airframe::AveragedEsc>(ac, config_.motor, config_.propulsion));
    }
    bus_.attach(address, units_.back().get());
  }

  gps_ = airframe::gps_stub(body_, config_.origin);
  log_.meta.seed = seed_;
  log_.meta.config_hash = config_hash(config_);
  log_.meta.version = version();
  log_.meta.scenario = scenario_.name;
  log_.meta.fidelity = to_string(tier_);
  spdlog::debug("simulation '{}' tier={} seed={} hover_rpm={:.1f}", scenario_.name, to_string(tier_), seed_,
                hover_rpm_);
}

void Simulation::run() {
  while (!finished_) tick();
}

void Simulation::tick() {
  if (finished_) return;
  try {
    physics();
    sensors();
    link();
    events();
    control();
    bus_phase();
    battery_phase();
  } catch (const SimulationFault&) {
    throw;
  } catch (const Error& e) {
    fault(std::string(e.kind()) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    fault(std::string("invalid_argument: ") + e.what());
  }
  if (!finished_ && time() >= scenario_.duration - 0.5 * kTick) {
    finished_ = true;
    end_reason_ = "duration";
  }
}

void Simulation::physics() {
  const double t0 = time();
  double power = vehicle_.avionics_power;
  for (std::size_t i = 0; i < units_.size(); ++i) {
    auto& u = *units_[i];
    u.advance(t0, kTick);
    const auto f = u.forces(config_.propulsion);
    loads_.thrust[i] = f.thrust;
    loads_.torque[i] = f.torque;
    power += u.electrical_power();
  }
  power_ = power;
  body_ = airframe::step_rigid_body(body_, loads_, vehicle_, kTick, scenario_.mount);
  ++ticks_;
}

void Simulation::sensors() {
  if (ticks_ % static_cast<std::uint64_t>(imu_div_) == 0) {
    const Eigen::Vector3d accel = scenario_.mount == airframe::Mount::kFree
                                      ? airframe::linear_acceleration(body_, loads_, vehicle_)
                                      : Eigen::Vector3d::Zero();
    const auto r = synth_.sample(body_, accel, vehicle_.gravity);
    estimate_ = flight::fuse_imu(r.accel, r.gyro, r.mag, estimate_, imu_div_ * kTick, config_.fusion);
    comm::ImuFrame f;
    f.sequence = imu_sequence_++;
    f.roll = frame_angle(estimate_.roll);
    f.pitch = frame_angle(estimate_.pitch);
    f.yaw = frame_angle(estimate_.yaw);
    f.p = static_cast<float>(estimate_.body_rates.x());
    f.q = static_cast<float>(estimate_.body_rates.y());
    f.r = static_cast<float>(estimate_.body_rates.z());
    imu_link_.send(comm::encode_imu(f), time());
  }
  if (ticks_ % static_cast<std::uint64_t>(gps_div_) == 0) gps_ = airframe::gps_stub(body_, config_.origin);
}

void Simulation::link() {
  for (const auto& d : imu_link_.poll(time())) {
    measured_.roll = d.frame.roll;
    measured_.pitch = d.frame.pitch;
    measured_.yaw = d.frame.yaw;
    measured_.raw_yaw = d.frame.yaw;
    measured_.body_rates = {d.frame.p, d.frame.q, d.frame.r};
  }
}

void Simulation::events() {
  const double t = time();
  while (next_event_ < scenario_.timeline.size() && scenario_.timeline[next_event_].t <= t + 1e-9) {
    const auto& e = scenario_.timeline[next_event_++];
    apply(e);
    marker(e.t, e.describe());
  }
}

void Simulation::apply(const Event& e) {
  spdlog::debug("t={:.3f} event {}", time(), e.describe());
  const auto& a = e.args;
  switch (e.kind) {
    case EventKind::kArm:
      try {
        estimate_ = flight::reset_heading(estimate_);
      } catch (const NotStationary& ex) {
        fault(std::string("ARM refused: ") + ex.what());
      }
      queue_all(comm::make_arm);
      controller_.arm();
      phase_ = FlightPhase::kGround;
      mission_ = {0.0, 0.0, 0.0, config_.mission.idle_rpm};
      controller_.set_mission(mission_);
      break;
    case EventKind::kTakeoff:
      target_alt_ = a[0];
      phase_ = scenario_.mount == airframe::Mount::kFree ? FlightPhase::kClimb : FlightPhase::kHold;
      break;
    case EventKind::kHover:
      mission_.roll = 0.0;
      mission_.pitch = 0.0;
      forward_until_ = -1.0;
      break;
    case EventKind::kSetAttitude:
      mission_.roll = flight::wrap_deg(a[0]);
      mission_.pitch = flight::wrap_deg(a[1]);
      mission_.yaw = flight::wrap_deg(a[2]);
      break;
    case EventKind::kForward: {
      // Nose-down tilt whose horizontal thrust balances body drag at speed.
      const double tilt = std::atan(vehicle_.linear_drag * a[0] / vehicle_.weight()) / kDeg;
      mission_.pitch = -std::clamp(tilt, -config_.mission.max_tilt_deg, config_.mission.max_tilt_deg);
      forward_until_ = e.t + a[1];
      break;
    }
    case EventKind::kYawTo:
      mission_.yaw = flight::wrap_deg(a[0]);
      break;
    case EventKind::kLand:
      mission_.roll = 0.0;
      mission_.pitch = 0.0;
      forward_until_ = -1.0;
      phase_ = scenario_.mount == airframe::Mount::kFree ? FlightPhase::kLand : FlightPhase::kLanded;
      break;
    case EventKind::kDisarm:
      queue_all(comm::make_disarm);
      controller_.disarm();
      phase_ = FlightPhase::kGround;
      break;
    case EventKind::kManual:
      manual_ = flight::AttitudeSetpoint{a[0], a[1], a[2], a[3]};
      manual_until_ = e.t + a[4];
      break;
  }
}

double Simulation::mission_throttle() {
  const auto& m = config_.mission;
  const double h0 = hover_rpm_;
  // Keep the vertical thrust component at weight while tilted.
  const double c = std::cos(measured_.roll * kDeg) * std::cos(measured_.pitch * kDeg);
  const double cmin = std::pow(std::cos(m.max_tilt_deg * kDeg), 2.0);
  const double hover = h0 / std::sqrt(std::max(c, cmin));
  if (phase_ == FlightPhase::kGround || phase_ == FlightPhase::kLanded) return m.idle_rpm;
  if (scenario_.mount != airframe::Mount::kFree) return hover;

  const double g = vehicle_.gravity;
  const double a_up = g * (std::pow((h0 + m.takeoff_offset_rpm) / h0, 2.0) - 1.0);
  const double a_dn = g * (1.0 - std::pow(std::max(0.0, h0 - m.landing_offset_rpm) / h0, 2.0));
  const double alt = body_.altitude();
  const double v_up = -body_.velocity.z();

  switch (phase_) {
    case FlightPhase::kClimb:
      if (alt + std::max(v_up, 0.0) * std::max(v_up, 0.0) / (2.0 * a_dn) >= target_alt_) phase_ = FlightPhase::kBrake;
      break;
    case FlightPhase::kBrake:
      if (v_up <= 0.0) phase_ = FlightPhase::kHold;
      break;
    case FlightPhase::kDescend:
      if (alt - std::min(v_up, 0.0) * std::min(v_up, 0.0) / (2.0 * a_up) <= target_alt_) phase_ = FlightPhase::kArrest;
      break;
    case FlightPhase::kArrest:
      if (v_up >= 0.0) phase_ = FlightPhase::kHold;
      break;
    case FlightPhase::kHold:
      if (alt < target_alt_ - m.altitude_band) phase_ = FlightPhase::kClimb;
      if (alt > target_alt_ + m.altitude_band) phase_ = FlightPhase::kDescend;
      break;
    case FlightPhase::kLand:
      if (body_.on_ground) {
        phase_ = FlightPhase::kLanded;
        return m.idle_rpm;
      }
      return -v_up > m.land_speed ? hover + m.takeoff_offset_rpm : hover - m.landing_offset_rpm;
    default: break;
  }
  switch (phase_) {
    case FlightPhase::kClimb:
    case FlightPhase::kArrest: return hover + m.takeoff_offset_rpm;
    case FlightPhase::kBrake:
    case FlightPhase::kDescend: return std::max(0.0, hover - m.landing_offset_rpm);
    default: return hover;
  }
}

void Simulation::control() {
  if (ticks_ % static_cast<std::uint64_t>(ctrl_div_) != 0) return;
  const double t = time();
  ++control_steps_;
  if (forward_until_ >= 0.0 && t >= forward_until_ - 1e-9) {
    mission_.pitch = 0.0;
    forward_until_ = -1.0;
  }
  if (controller_.armed()) {
    mission_.throttle = mission_throttle();
    controller_.set_mission(mission_);
    if (manual_ && t <= manual_until_ + 1e-9) controller_.manual_input(*manual_, t);
    if (relay_) {
      const double cmd = relay_->update(t, axis_angle(measured_, relay_axis_));
      controller_.override_axis(relay_axis_, relay_->done() ? std::nullopt : std::optional<double>(cmd));
    }
    last_output_ = controller_.control_step(measured_, t);
    for (const auto& f : last_output_->frames) queue_.push_back({t, f});
    queue_.push_back({t, comm::make_get_status(config_.flight.addresses[status_cursor_])});
    status_cursor_ = (status_cursor_ + 1) % config_.flight.addresses.size();
  } else {
    last_output_.reset();
  }
  if ((control_steps_ - 1) % static_cast<std::uint64_t>(scenario_.telemetry_every) == 0) log_.rows.push_back(row(t));
}

void Simulation::bus_phase() {
  const double t = time();
  for (;;) {
    if (auto d = bus_.poll(t)) {
      if (d->reply.empty()) continue;
      comm::CommandFrame reply;
      try {
        reply = comm::decode_frame(d->reply);
      } catch (const Error&) {
        spdlog::debug("t={:.4f} unreadable reply from esc {}", t, d->address);
        continue;
      }
      if (reply.command == (static_cast<std::uint8_t>(comm::Opcode::kGetStatus) | comm::kAckBit)) {
        const auto status = comm::decode_status(reply.payload);
        if ((status.flags & esc::kFaultMask) != 0) {
          char flags[8];
          std::snprintf(flags, sizeof flags, "0x%02X", status.flags);
          fault("esc " + std::to_string(d->address) + " latched fault flags " + flags);
        }
      } else if (reply.command == comm::kErrorReply) {
        spdlog::debug("t={:.4f} esc {} error reply", t, d->address);
      }
      continue;
    }
    if (bus_.in_flight() != 0 || queue_.empty()) break;
    const double start = std::max(queue_.front().t_ready, bus_.busy_until());
    if (start > t) break;
    bus_.submit(comm::encode_frame(queue_.front().frame), start);
    queue_.pop_front();
  }
}

void Simulation::battery_phase() {
  battery_ = airframe::battery_step(battery_, power_, kTick);
  energy_used_j_ += power_ * kTick;
  if (phase_ == FlightPhase::kHold) {
    hold_energy_j_ += power_ * kTick;
    hold_time_ += kTick;
  }
  max_alt_ = std::max(max_alt_, body_.altitude());
  if (battery_.depleted() && depletion_time_ == 0.0) {
    depletion_time_ = time();
    marker(time(), "DEPLETED");
    spdlog::info("battery depleted at t={:.3f} s", depletion_time_);
    if (scenario_.stop_on_depletion) {
      finished_ = true;
      end_reason_ = "depleted";
    }
  }
}

void Simulation::queue_all(comm::CommandFrame (*make)(std::uint8_t)) {
  for (auto address : config_.flight.addresses) queue_.push_back({time(), make(address)});
}

void Simulation::start_relay(flight::Axis axis, const flight::RelayConfig& relay) {
  relay_.emplace(relay);
  relay_axis_ = axis;
}

TelemetryRow Simulation::row(double t) const {
  TelemetryRow r;
  r.t = t;
  r.source = "-";
  if (last_output_) {
    r.source = flight::to_string(last_output_->source);
    r.att_set = {last_output_->filtered.roll, last_output_->filtered.pitch, last_output_->filtered.yaw};
    r.pid = last_output_->command;
    std::copy(last_output_->rpm.begin(), last_output_->rpm.end(), r.setpoint_rpm.begin());
  }
  r.att_meas = {measured_.roll, measured_.pitch, measured_.yaw};
  const Eigen::Vector3d e = airframe::euler_deg(body_.attitude);
  r.att_true = {e.x(), e.y(), e.z()};
  for (std::size_t i = 0; i < units_.size(); ++i) {
    r.motor_rpm[i] = bldc::rad_s_to_rpm(units_[i]->omega());
    r.thrust[i] = loads_.thrust[i];
  }
  r.position = {body_.position.x(), body_.position.y(), body_.altitude()};
  r.velocity = {body_.velocity.x(), body_.velocity.y(), body_.velocity.z()};
  r.lat = gps_.lat_deg;
  r.lon = gps_.lon_deg;
  r.gps_alt = gps_.alt_m;
  r.power_w = power_;
  r.energy_wh = battery_.energy_wh;
  return r;
}

void Simulation::marker(double t, const std::string& note) {
  TelemetryRow r = row(t);
  r.kind = RowKind::kEvent;
  r.note = note;
  log_.rows.push_back(std::move(r));
}

void Simulation::fault(const std::string& what) {
  char when[32];
  std::snprintf(when, sizeof when, "%.3f", time());
  fault_ = what + " (t=" + when + " s)";
  end_reason_ = "fault";
  finished_ = true;
  marker(time(), "FAULT");
  spdlog::error("simulation fault: {}", fault_);
  throw SimulationFault(fault_);
}

RunSummary Simulation::summary() const {
  RunSummary s;
  s.scenario = scenario_.name;
  s.fidelity = to_string(tier_);
  s.seed = seed_;
  s.config_hash = log_.meta.config_hash;
  s.sim_time = time();
  s.end_reason = end_reason_.empty() ? "running" : end_reason_;
  s.depleted = battery_.depleted();
  s.depletion_time = depletion_time_;
  s.energy_used_wh = energy_used_j_ / 3600.0;
  s.mean_power_w = s.sim_time > 0.0 ? energy_used_j_ / s.sim_time : 0.0;
  s.hold_time = hold_time_;
  s.hold_power_w = hold_time_ > 0.0 ? hold_energy_j_ / hold_time_ : 0.0;
  s.max_altitude = max_alt_;
  s.bus_transactions = bus_.completed();
  s.imu_frames = imu_link_.delivered();
  s.imu_dropped = imu_link_.dropped();
  s.fault = fault_;
  return s;
}

RunResult Simulation::take_result() {
  RunResult r;
  r.summary = summary();
  r.log = std::move(log_);
  log_ = {};
  return r;
}

RunResult run(const Scenario& scenario, const SimConfig& config, const RunOptions& options) {
  Simulation sim(config, scenario, options);
  sim.run();
  return sim.take_result();
}

AutotuneReport run_autotune(const SimConfig& config, bldc::Tier tier, std::uint64_t seed) {
  AutotuneReport report;
  report.tuned = config;
  constexpr airframe::Mount kMounts[] = {airframe::Mount::kGimbalRoll, airframe::Mount::kGimbalPitch,
                                         airframe::Mount::kGimbalYaw};
  constexpr const char* kNames[] = {"roll", "pitch", "yaw"};
  constexpr double kRelayStart = 1.0;
  for (std::size_t a = 0; a < 3; ++a) {
    Scenario sc;
    sc.name = std::string("autotune_") + kNames[a];
    sc.fidelity = tier;
    sc.seed = seed;
    sc.mount = kMounts[a];
    sc.duration = kRelayStart + config.autotune.t_max;
    sc.telemetry_every = 1000000;
    sc.timeline = {{0.1, EventKind::kArm, {}}, {0.5, EventKind::kTakeoff, {1.0}}};
    Simulation sim(config, sc);
    while (sim.time() < kRelayStart - 0.5 * kTick) sim.tick();
    const auto axis = static_cast<flight::Axis>(a);
    sim.start_relay(axis, config.autotune);
    while (!sim.relay()->done()) {
      if (sim.finished()) {
        throw NoOscillation(std::string(kNames[a]) + ": no steady limit cycle within " +
                            format_double(config.autotune.t_max) + " s");
      }
      sim.tick();
    }
    auto r = sim.relay()->result();
    r.gains = flight::ziegler_nichols(r.ku, r.tu, config.flight.pid[a].output_limit);
    spdlog::info("autotune {}: Ku={:.4g} Tu={:.4g} s amplitude={:.3g} deg", kNames[a], r.ku, r.tu, r.amplitude);
    report.axes[a] = r;
    auto& pid = report.tuned.flight.pid[a];
    pid.kp = r.gains.kp;
    pid.ki = r.gains.ki;
    pid.kd = r.gains.kd;
  }
  report.tuned.validate();
  return report;
}

}  // namespace hexastack::harness
