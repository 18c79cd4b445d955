#include "hexastack/harness/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include "hexastack/errors.hpp"

namespace hexastack::harness {
namespace {

using DoubleRef = double& (*)(SimConfig&);
using IntRef = int& (*)(SimConfig&);
using BoolRef = bool& (*)(SimConfig&);
using AnglesRef = std::array<double, 6>& (*)(SimConfig&);
using SpinRef = std::array<int, 6>& (*)(SimConfig&);

struct Field {
  const char* section;
  const char* key;
  std::variant<DoubleRef, IntRef, BoolRef, AnglesRef, SpinRef> ref;
};

#define D(sec, name, expr) Field{sec, name, DoubleRef{[](SimConfig& c) -> double& { return expr; }}}
#define I(sec, name, expr) Field{sec, name, IntRef{[](SimConfig& c) -> int& { return expr; }}}
#define B(sec, name, expr) Field{sec, name, BoolRef{[](SimConfig& c) -> bool& { return expr; }}}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      D("motor", "kv", c.motor.kv),
      D("motor", "r_phase", c.motor.r_phase),
      D("motor", "l_phase", c.motor.l_phase),
      D("motor", "i_max", c.motor.i_max),
      D("motor", "p_rated", c.motor.p_rated),
      I("motor", "pole_pairs", c.motor.pole_pairs),
      D("motor", "inertia", c.motor.rotor_inertia),
      D("motor", "friction", c.motor.friction_coeff),

      D("esc", "pwm_frequency", c.esc.pwm_frequency),
      I("esc", "speed_loop_divisor", c.esc.speed_loop_divisor),
      I("esc", "majority_window", c.esc.majority_window),
      D("esc", "kp", c.esc.kp),
      D("esc", "ki", c.esc.ki),
      D("esc", "align_duty", c.esc.align_duty),
      D("esc", "align_time", c.esc.align_time),
      D("esc", "ramp_start_rate", c.esc.ramp_start_rate),
      D("esc", "ramp_end_rate", c.esc.ramp_end_rate),
      D("esc", "ramp_time", c.esc.ramp_time),
      D("esc", "ramp_boost", c.esc.ramp_boost),
      D("esc", "startup_timeout", c.esc.startup_timeout),
      D("esc", "min_closed_loop_rpm", c.esc.min_closed_loop_rpm),
      I("esc", "handoff_sectors", c.esc.handoff_sectors),
      I("esc", "settle_crossings", c.esc.settle_crossings),
      I("esc", "max_missed_crossings", c.esc.max_missed_crossings),
      D("esc", "current_limit", c.esc.current_limit),

      D("propulsion", "k_thrust", c.propulsion.k_thrust),
      D("propulsion", "k_drag", c.propulsion.k_drag),
      D("propulsion", "tau_m", c.propulsion.tau_m),

      D("vehicle", "mass", c.vehicle.mass_empty),
      D("vehicle", "arm_length", c.vehicle.arm_length),
      D("vehicle", "inertia_xx", c.vehicle.inertia.x()),
      D("vehicle", "inertia_yy", c.vehicle.inertia.y()),
      D("vehicle", "inertia_zz", c.vehicle.inertia.z()),
      D("vehicle", "avionics_power", c.vehicle.avionics_power),
      D("vehicle", "linear_drag", c.vehicle.linear_drag),
      D("vehicle", "angular_damping", c.vehicle.angular_damping),
      D("vehicle", "gravity", c.vehicle.gravity),
      Field{"vehicle", "arm_angles", AnglesRef{[](SimConfig& c) -> std::array<double, 6>& {
              return c.vehicle.arm_angles_deg;
            }}},
      Field{"vehicle", "spin", SpinRef{[](SimConfig& c) -> std::array<int, 6>& { return c.vehicle.spin; }}},

      D("battery", "voltage", c.battery.voltage),
      D("battery", "capacity_wh", c.battery.capacity_wh),

      D("sensors", "imu_rate_hz", c.imu_rate_hz),
      D("sensors", "gps_rate_hz", c.gps_rate_hz),
      D("sensors", "accel_sigma", c.sensors.accel_sigma),
      D("sensors", "gyro_sigma", c.sensors.gyro_sigma),
      D("sensors", "mag_sigma", c.sensors.mag_sigma),
      D("sensors", "accel_bias_x", c.sensors.accel_bias.x()),
      D("sensors", "accel_bias_y", c.sensors.accel_bias.y()),
      D("sensors", "accel_bias_z", c.sensors.accel_bias.z()),
      D("sensors", "gyro_bias_x", c.sensors.gyro_bias.x()),
      D("sensors", "gyro_bias_y", c.sensors.gyro_bias.y()),
      D("sensors", "gyro_bias_z", c.sensors.gyro_bias.z()),
      D("sensors", "mag_inclination", c.sensors.mag_inclination_deg),
      D("sensors", "origin_lat", c.origin.lat_deg),
      D("sensors", "origin_lon", c.origin.lon_deg),
      D("sensors", "origin_alt", c.origin.alt_m),

      D("bus", "bit_rate", c.bus.bit_rate),
      D("bus", "uart_baud", c.uart.baud),

      D("flight", "rate_hz", c.flight.rate_hz),
      D("flight", "hover_rpm", c.flight.hover_rpm),
      D("flight", "manual_timeout", c.flight.manual_timeout),
      B("flight", "prefilter", c.flight.prefilter),
      D("flight", "min_rpm", c.flight.limits.min_rpm),
      D("flight", "max_rpm", c.flight.limits.max_rpm),
      D("flight", "k_roll", c.flight.geometry.k_roll),
      D("flight", "k_pitch", c.flight.geometry.k_pitch),
      D("flight", "k_yaw", c.flight.geometry.k_yaw),
      D("flight", "roll_kp", c.flight.pid[0].kp),
      D("flight", "roll_ki", c.flight.pid[0].ki),
      D("flight", "roll_kd", c.flight.pid[0].kd),
      D("flight", "roll_limit", c.flight.pid[0].output_limit),
      D("flight", "pitch_kp", c.flight.pid[1].kp),
      D("flight", "pitch_ki", c.flight.pid[1].ki),
      D("flight", "pitch_kd", c.flight.pid[1].kd),
      D("flight", "pitch_limit", c.flight.pid[1].output_limit),
      D("flight", "yaw_kp", c.flight.pid[2].kp),
      D("flight", "yaw_ki", c.flight.pid[2].ki),
      D("flight", "yaw_kd", c.flight.pid[2].kd),
      D("flight", "yaw_limit", c.flight.pid[2].output_limit),
      D("flight", "alpha", c.fusion.alpha),
      B("flight", "use_mag", c.fusion.use_mag),

      D("mission", "takeoff_offset_rpm", c.mission.takeoff_offset_rpm),
      D("mission", "landing_offset_rpm", c.mission.landing_offset_rpm),
      D("mission", "altitude_band", c.mission.altitude_band),
      D("mission", "land_speed", c.mission.land_speed),
      D("mission", "idle_rpm", c.mission.idle_rpm),
      D("mission", "max_tilt", c.mission.max_tilt_deg),

      D("autotune", "amplitude", c.autotune.amplitude),
      D("autotune", "hysteresis", c.autotune.hysteresis),
      I("autotune", "settle_cycles", c.autotune.settle_cycles),
      I("autotune", "measure_cycles", c.autotune.measure_cycles),
      D("autotune", "t_max", c.autotune.t_max),
      D("autotune", "max_spread", c.autotune.max_spread),

      D("calibration", "full_current", c.calibration.full_current),
      D("calibration", "full_thrust", c.calibration.full_thrust),
      D("calibration", "hover_power", c.calibration.hover_power),
      D("calibration", "hover_tolerance", c.calibration.hover_tolerance),
      D("calibration", "drag_ratio", c.calibration.drag_ratio),
  };
  return table;
}

#undef D
#undef I
#undef B

const char* const kSectionOrder[] = {"motor",   "esc",    "propulsion", "vehicle",  "battery",
                                     "sensors", "bus",    "flight",     "mission",  "autotune",
                                     "calibration"};

[[noreturn]] void bad_value(const Document& doc, const Entry& e, const std::string& section,
                            const char* what) {
  throw ParseError(doc.source + ":" + std::to_string(e.line) + ": " + section + "." + e.key + ": " +
                   what + " '" + e.value + "'");
}

double to_double(const Document& doc, const std::string& section, const Entry& e, std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end || !std::isfinite(v)) bad_value(doc, e, section, "expected a number, got");
  return v;
}

int to_int(const Document& doc, const std::string& section, const Entry& e, std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end) bad_value(doc, e, section, "expected an integer, got");
  return v;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    auto item = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    out.push_back(a == std::string_view::npos ? std::string_view{} : item.substr(a, b - a + 1));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T, typename Conv>
std::array<T, 6> to_list(const Document& doc, const std::string& section, const Entry& e, Conv conv) {
  const auto items = split_list(e.value);
  if (items.size() != 6) bad_value(doc, e, section, "expected 6 comma-separated values, got");
  std::array<T, 6> out{};
  for (std::size_t i = 0; i < 6; ++i) out[i] = conv(doc, section, e, items[i]);
  return out;
}

void assign(SimConfig& c, const Field& f, const Document& doc, const std::string& section, const Entry& e) {
  std::visit(
      [&](auto ref) {
        using R = decltype(ref);
        if constexpr (std::is_same_v<R, DoubleRef>) {
          ref(c) = to_double(doc, section, e, e.value);
        } else if constexpr (std::is_same_v<R, IntRef>) {
          ref(c) = to_int(doc, section, e, e.value);
        } else if constexpr (std::is_same_v<R, BoolRef>) {
          if (e.value == "true") {
            ref(c) = true;
          } else if (e.value == "false") {
            ref(c) = false;
          } else {
            bad_value(doc, e, section, "expected true or false, got");
          }
        } else if constexpr (std::is_same_v<R, AnglesRef>) {
          ref(c) = to_list<double>(doc, section, e, to_double);
        } else {
          ref(c) = to_list<int>(doc, section, e, to_int);
        }
      },
      f.ref);
}

std::string render(SimConfig& c, const Field& f) {
  return std::visit(
      [&](auto ref) -> std::string {
        using R = decltype(ref);
        if constexpr (std::is_same_v<R, DoubleRef>) {
          return format_double(ref(c));
        } else if constexpr (std::is_same_v<R, IntRef>) {
          return std::to_string(ref(c));
        } else if constexpr (std::is_same_v<R, BoolRef>) {
          return ref(c) ? "true" : "false";
        } else {
          std::string s;
          for (std::size_t i = 0; i < 6; ++i) {
            if (i) s += ", ";
            if constexpr (std::is_same_v<R, AnglesRef>) {
              s += format_double(ref(c)[i]);
            } else {
              s += std::to_string(ref(c)[i]);
            }
          }
          return s;
        }
      },
      f.ref);
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

SimConfig::SimConfig() {
  // Relay-tuned on the default airframe.
  flight.pid[0] = {33.88, 124.9, 2.297, 0.0, 0.0, 1500.0};
  flight.pid[1] = {32.30, 116.1, 2.247, 0.0, 0.0, 1500.0};
  flight.pid[2] = {159.4, 298.3, 21.30, 0.0, 0.0, 1500.0};
  flight.hover_rpm = 0.0;
  flight.limits.max_rpm = 9000.0;
}

void SimConfig::validate() const {
  motor.validate();
  esc.validate();
  propulsion.validate();
  vehicle.validate();
  battery.validate();
  flight.validate();
  auto fail = [](const std::string& key, const std::string& why) { throw ValidationError(key + ": " + why); };
  if (!(imu_rate_hz > 0.0)) fail("sensors.imu_rate_hz", "must be > 0");
  if (!(gps_rate_hz > 0.0)) fail("sensors.gps_rate_hz", "must be > 0");
  if (std::abs(1000.0 / imu_rate_hz - std::round(1000.0 / imu_rate_hz)) > 1e-9) {
    fail("sensors.imu_rate_hz", "period must be a whole number of 1 ms ticks");
  }
  if (std::abs(1000.0 / flight.rate_hz - std::round(1000.0 / flight.rate_hz)) > 1e-9) {
    fail("flight.rate_hz", "period must be a whole number of 1 ms ticks");
  }
  if (!(sensors.accel_sigma >= 0.0)) fail("sensors.accel_sigma", "must be >= 0");
  if (!(sensors.gyro_sigma >= 0.0)) fail("sensors.gyro_sigma", "must be >= 0");
  if (!(sensors.mag_sigma >= 0.0)) fail("sensors.mag_sigma", "must be >= 0");
  if (!(std::abs(origin.lat_deg) < 90.0)) fail("sensors.origin_lat", "must be within (-90, 90)");
  if (!(bus.bit_rate >= 0.0)) fail("bus.bit_rate", "must be >= 0");
  if (!(uart.baud > 0.0)) fail("bus.uart_baud", "must be > 0");
  if (!(fusion.alpha >= 0.0 && fusion.alpha <= 1.0)) fail("flight.alpha", "must be within [0, 1]");
  if (!(mission.takeoff_offset_rpm > 0.0)) fail("mission.takeoff_offset_rpm", "must be > 0");
  if (!(mission.landing_offset_rpm > 0.0)) fail("mission.landing_offset_rpm", "must be > 0");
  if (!(mission.altitude_band > 0.0)) fail("mission.altitude_band", "must be > 0");
  if (!(mission.land_speed > 0.0)) fail("mission.land_speed", "must be > 0");
  if (!(mission.idle_rpm >= 0.0)) fail("mission.idle_rpm", "must be >= 0");
  if (!(mission.max_tilt_deg > 0.0 && mission.max_tilt_deg < 90.0)) fail("mission.max_tilt", "must be within (0, 90)");
  if (!(autotune.amplitude > 0.0)) fail("autotune.amplitude", "must be > 0");
  if (!(autotune.hysteresis >= 0.0)) fail("autotune.hysteresis", "must be >= 0");
  if (autotune.settle_cycles < 0) fail("autotune.settle_cycles", "must be >= 0");
  if (autotune.measure_cycles < 1) fail("autotune.measure_cycles", "must be >= 1");
  if (!(autotune.t_max > 0.0)) fail("autotune.t_max", "must be > 0");
  if (!(autotune.max_spread > 0.0)) fail("autotune.max_spread", "must be > 0");
  if (!(calibration.full_current > 0.0)) fail("calibration.full_current", "must be > 0");
  if (!(calibration.full_thrust > 0.0)) fail("calibration.full_thrust", "must be > 0");
  if (!(calibration.hover_power > 0.0)) fail("calibration.hover_power", "must be > 0");
  if (!(calibration.hover_tolerance > 0.0)) fail("calibration.hover_tolerance", "must be > 0");
  if (!(calibration.drag_ratio > 0.0)) fail("calibration.drag_ratio", "must be > 0");
  if (flight.geometry.arm_angles_deg != vehicle.arm_angles_deg || flight.geometry.spin != vehicle.spin) {
    fail("vehicle.arm_angles", "mixer geometry out of sync with the airframe");
  }
}

double SimConfig::hover_rpm(double payload_kg) const {
  if (flight.hover_rpm > 0.0) return flight.hover_rpm;
  const double weight = (vehicle.mass_empty + payload_kg) * vehicle.gravity;
  return bldc::rad_s_to_rpm(airframe::speed_for_thrust(weight / airframe::kMotors, propulsion));
}

airframe::CalibrationTargets SimConfig::calibration_targets() const {
  airframe::CalibrationTargets t = calibration;
  t.vdc = battery.voltage;
  t.hover_mass = vehicle.mass_empty;
  t.avionics_power = vehicle.avionics_power;
  t.gravity = vehicle.gravity;
  t.motors = airframe::kMotors;
  return t;
}

SimConfig parse_config(const Document& doc) {
  SimConfig c;
  std::set<std::string> seen;
  for (const auto& section : doc.sections) {
    bool known_section = false;
    for (const char* s : kSectionOrder) known_section = known_section || section.name == s;
    if (!known_section) {
      throw ValidationError(section.name + ": unknown section (" + doc.source + ":" +
                            std::to_string(section.line) + ")");
    }
    for (const auto& e : section.entries) {
      const std::string full = section.name + "." + e.key;
      const Field* field = nullptr;
      for (const auto& f : fields()) {
        if (section.name == f.section && e.key == f.key) field = &f;
      }
      if (field == nullptr) {
        throw ValidationError(full + ": unknown key (" + doc.source + ":" + std::to_string(e.line) + ")");
      }
      if (!seen.insert(full).second) {
        throw ValidationError(full + ": duplicate key (" + doc.source + ":" + std::to_string(e.line) + ")");
      }
      assign(c, *field, doc, section.name, e);
    }
  }
  c.motor.kt = bldc::torque_constant_from_kv(c.motor.kv);
  c.battery.energy_wh = c.battery.capacity_wh;
  c.flight.geometry.arm_angles_deg = c.vehicle.arm_angles_deg;
  c.flight.geometry.spin = c.vehicle.spin;
  c.validate();
  return c;
}

SimConfig load_config(const std::filesystem::path& path) { return parse_config(load_sectioned_file(path)); }

std::string write_config(const SimConfig& config) {
  SimConfig c = config;
  std::ostringstream out;
  bool first = true;
  for (const char* section : kSectionOrder) {
    out << (first ? "" : "\n") << "[" << section << "]\n";
    first = false;
    for (const auto& f : fields()) {
      if (std::string_view(f.section) == section) out << f.key << " = " << render(c, f) << "\n";
    }
  }
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const SimConfig& config) { return fnv1a64(write_config(config)); }

void apply_calibration(SimConfig& config, const airframe::CalibrationResult& result) {
  config.propulsion.k_thrust = result.prop.k_thrust;
  config.propulsion.k_drag = result.prop.k_drag;
  config.motor.friction_coeff = result.friction;
}

}  // namespace hexastack::harness
