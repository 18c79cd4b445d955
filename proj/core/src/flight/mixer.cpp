#include "hexastack/flight/mixer.hpp"

#include <algorithm>
#include <cmath>

#include "hexastack/errors.hpp"

namespace hexastack::flight {
namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// sin and cos of each arm, reduced to the first quadrant so that opposite
// arms get exactly opposite weights and the axes get exact zeros.
double exact_sin(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  const double sign = a > 180.0 ? -1.0 : 1.0;
  if (a > 180.0) a -= 180.0;
  if (a > 90.0) a = 180.0 - a;
  if (a == 0.0) return 0.0;
  if (a == 90.0) return sign;
  return sign * std::sin(a * kDeg);
}
double exact_cos(double deg) { return exact_sin(deg + 90.0); }

bool within(const Setpoints& s, const MotorLimits& lim) {
  return std::all_of(s.begin(), s.end(),
                     [&](double v) { return v >= lim.min_rpm && v <= lim.max_rpm; });
}

// Largest k in [0, 1] with base + k * delta inside the limits; base must be.
double max_scale(const Setpoints& base, const Setpoints& delta, const MotorLimits& lim) {
  double k = 1.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (delta[i] > 0.0) k = std::min(k, (lim.max_rpm - base[i]) / delta[i]);
    if (delta[i] < 0.0) k = std::min(k, (lim.min_rpm - base[i]) / delta[i]);
  }
  return std::max(0.0, k);
}

}  // namespace

void MixerGeometry::validate() const {
  int spin_sum = 0;
  double sin_sum = 0.0, cos_sum = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    if (spin[i] != 1 && spin[i] != -1) throw ValidationError("mixer.spin: entries must be +1 or -1");
    spin_sum += spin[i];
    sin_sum += exact_sin(arm_angles_deg[i]);
    cos_sum += exact_cos(arm_angles_deg[i]);
  }
  if (spin_sum != 0) throw ValidationError("mixer.spin: must sum to zero");
  if (std::abs(sin_sum) > 1e-9 || std::abs(cos_sum) > 1e-9) {
    throw ValidationError("mixer.arm_angles: sin and cos must each sum to zero");
  }
}

Setpoints mix(const MixInput& in, const MixerGeometry& g) {
  Setpoints s{};
  for (std::size_t i = 0; i < 6; ++i) {
    const double a = g.arm_angles_deg[i];
    s[i] = in.throttle + g.k_roll * in.roll * exact_sin(a) + g.k_pitch * in.pitch * exact_cos(a) +
           g.k_yaw * in.yaw * g.spin[i];
  }
  return s;
}

Setpoints saturate(const MixInput& in, const MixerGeometry& g, const MotorLimits& lim) {
  const Setpoints full = mix(in, g);
  if (within(full, lim)) return full;

  MixInput base = in;
  base.throttle = std::clamp(in.throttle, lim.min_rpm, lim.max_rpm);
  base.roll = base.pitch = base.yaw = 0.0;
  const Setpoints thr = mix(base, g);

  MixInput rp = base;
  rp.roll = in.roll;
  rp.pitch = in.pitch;
  Setpoints rp_delta = mix(rp, g);
  for (std::size_t i = 0; i < 6; ++i) rp_delta[i] -= thr[i];
  const double k_rp = max_scale(thr, rp_delta, lim);

  Setpoints with_rp{};
  for (std::size_t i = 0; i < 6; ++i) with_rp[i] = thr[i] + k_rp * rp_delta[i];

  MixInput yaw_only;
  yaw_only.yaw = in.yaw;
  const Setpoints yaw_delta = mix(yaw_only, g);
  const double k_yaw = max_scale(with_rp, yaw_delta, lim);

  Setpoints out{};
  for (std::size_t i = 0; i < 6; ++i) {
    out[i] = std::clamp(with_rp[i] + k_yaw * yaw_delta[i], lim.min_rpm, lim.max_rpm);
  }
  return out;
}

}  // namespace hexastack::flight
