#include "hexastack/airframe/rigid_body.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::airframe {
namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

double wrap180(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

struct Derivative {
  Eigen::Vector3d dpos;
  Eigen::Vector3d dvel;
  Eigen::Vector4d dq;  // w, x, y, z
  Eigen::Vector3d drates;
};

struct Flat {
  Eigen::Vector3d pos;
  Eigen::Vector3d vel;
  Eigen::Vector4d q;
  Eigen::Vector3d rates;
};

Eigen::Quaterniond to_quat(const Eigen::Vector4d& v) {
  return Eigen::Quaterniond(v[0], v[1], v[2], v[3]).normalized();
}

Eigen::Vector3d free_axis(Mount mount) {
  switch (mount) {
    case Mount::kGimbalRoll: return Eigen::Vector3d::UnitX();
    case Mount::kGimbalPitch: return Eigen::Vector3d::UnitY();
    case Mount::kGimbalYaw: return Eigen::Vector3d::UnitZ();
    case Mount::kFree:
    case Mount::kFixed: break;
  }
  return Eigen::Vector3d::Zero();
}

Derivative derivative(const Flat& s, const Wrench& w, const VehicleParams& p, Mount mount,
                      bool pinned) {
  Derivative d;
  const Eigen::Quaterniond q = to_quat(s.q);
  const Eigen::Vector3d gravity(0.0, 0.0, p.gravity);
  if (pinned) {
    d.dpos.setZero();
    d.dvel.setZero();
  } else {
    d.dpos = s.vel;
    d.dvel = q * w.force / p.mass() + gravity - p.linear_drag / p.mass() * s.vel;
  }
  const Eigen::Vector3d& i = p.inertia;
  const Eigen::Vector3d h = i.cwiseProduct(s.rates);
  Eigen::Vector3d moment = w.moment - s.rates.cross(h) - p.angular_damping * s.rates;
  d.drates = moment.cwiseQuotient(i);
  if (mount == Mount::kFixed) {
    d.drates.setZero();
  } else if (mount != Mount::kFree) {
    const Eigen::Vector3d axis = free_axis(mount);
    d.drates = axis * axis.dot(w.moment - p.angular_damping * s.rates) / axis.dot(i.cwiseProduct(axis));
  }
  // q' = 0.5 q (x) (0, omega)
  const Eigen::Quaterniond omega(0.0, s.rates.x(), s.rates.y(), s.rates.z());
  const Eigen::Quaterniond qq(s.q[0], s.q[1], s.q[2], s.q[3]);
  const Eigen::Quaterniond dq = qq * omega;
  d.dq = 0.5 * Eigen::Vector4d(dq.w(), dq.x(), dq.y(), dq.z());
  return d;
}

Flat add(const Flat& s, const Derivative& d, double h) {
  return {s.pos + h * d.dpos, s.vel + h * d.dvel, s.q + h * d.dq, s.rates + h * d.drates};
}

bool finite(const RigidBodyState& s) {
  return s.position.allFinite() && s.velocity.allFinite() && s.rates.allFinite() &&
         s.attitude.coeffs().allFinite();
}

}  // namespace

Eigen::Vector3d VehicleParams::motor_position(int i) const {
  const double a = arm_angles_deg.at(static_cast<std::size_t>(i)) * kDeg;
  return {arm_length * std::cos(a), -arm_length * std::sin(a), 0.0};
}

void VehicleParams::validate() const {
  auto fail = [](const char* key, const std::string& why) {
    throw ValidationError(std::string("vehicle.") + key + ": " + why);
  };
  if (!(mass_empty > 0.0)) fail("mass", "must be > 0");
  if (!(payload >= 0.0 && payload <= 4.0)) fail("payload", "must be within [0, 4] kg");
  if (!(arm_length > 0.0)) fail("arm_length", "must be > 0");
  if (!(inertia.minCoeff() > 0.0)) fail("inertia", "all components must be > 0");
  if (!(avionics_power >= 0.0)) fail("avionics_power", "must be >= 0");
  if (!(linear_drag >= 0.0)) fail("linear_drag", "must be >= 0");
  if (!(angular_damping >= 0.0)) fail("angular_damping", "must be >= 0");
  if (!(gravity > 0.0)) fail("gravity", "must be > 0");
  int spin_sum = 0;
  for (int s : spin) {
    if (s != 1 && s != -1) fail("spin", "entries must be +1 or -1");
    spin_sum += s;
  }
  if (spin_sum != 0) fail("spin", "must sum to zero");
}

Wrench body_wrench(const MotorLoads& loads, const VehicleParams& params) {
  Wrench w;
  for (int i = 0; i < kMotors; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Eigen::Vector3d f(0.0, 0.0, -loads.thrust[k]);
    w.force += f;
    w.moment += params.motor_position(i).cross(f);
    w.moment.z() += params.spin[k] * loads.torque[k];
  }
  return w;
}

Eigen::Vector3d linear_acceleration(const RigidBodyState& state, const MotorLoads& loads,
                                    const VehicleParams& params) {
  const Wrench w = body_wrench(loads, params);
  Eigen::Vector3d a = state.attitude * w.force / params.mass() +
                      Eigen::Vector3d(0.0, 0.0, params.gravity) -
                      params.linear_drag / params.mass() * state.velocity;
  if (state.on_ground && a.z() >= 0.0 && state.position.z() >= 0.0) a.setZero();
  return a;
}

RigidBodyState step_rigid_body(const RigidBodyState& state, const MotorLoads& loads,
                               const VehicleParams& params, double dt, Mount mount) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rigid_body: dt must be > 0");
  for (int i = 0; i < kMotors; ++i) {
    if (!std::isfinite(loads.thrust[static_cast<std::size_t>(i)]) ||
        !std::isfinite(loads.torque[static_cast<std::size_t>(i)])) {
      throw NonFiniteState("motor loads became non-finite at t=" + std::to_string(state.timestamp));
    }
  }
  const Wrench w = body_wrench(loads, params);

  // Resting on the ground: no translation unless the thrust lifts off.
  const Eigen::Vector3d world_force = state.attitude * w.force;
  const bool lifting = world_force.z() + params.weight() < 0.0;
  const bool grounded = mount != Mount::kFree || (state.position.z() >= 0.0 && !lifting);

  const Flat s0{state.position, state.velocity,
                Eigen::Vector4d(state.attitude.w(), state.attitude.x(), state.attitude.y(),
                                state.attitude.z()),
                state.rates};
  const Derivative k1 = derivative(s0, w, params, mount, grounded);
  const Derivative k2 = derivative(add(s0, k1, 0.5 * dt), w, params, mount, grounded);
  const Derivative k3 = derivative(add(s0, k2, 0.5 * dt), w, params, mount, grounded);
  const Derivative k4 = derivative(add(s0, k3, dt), w, params, mount, grounded);
  const double h6 = dt / 6.0;

  RigidBodyState next = state;
  next.timestamp = state.timestamp + dt;
  next.position = s0.pos + h6 * (k1.dpos + 2.0 * k2.dpos + 2.0 * k3.dpos + k4.dpos);
  next.velocity = s0.vel + h6 * (k1.dvel + 2.0 * k2.dvel + 2.0 * k3.dvel + k4.dvel);
  next.attitude = to_quat(s0.q + h6 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq));
  next.rates = s0.rates + h6 * (k1.drates + 2.0 * k2.drates + 2.0 * k3.drates + k4.drates);

  next.on_ground = false;
  if (mount == Mount::kFree && next.position.z() >= 0.0) {
    // Touchdown or still resting: clamp to the ground, keep heading only.
    next.position.z() = 0.0;
    next.velocity.setZero();
    next.rates.setZero();
    const Eigen::Vector3d e = euler_deg(next.attitude);
    next.attitude = from_euler_deg(0.0, 0.0, e.z());
    next.on_ground = true;
  }
  if (!finite(next)) {
    throw NonFiniteState("rigid body state became non-finite at t=" + std::to_string(next.timestamp));
  }
  return next;
}

Eigen::Vector3d euler_deg(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {wrap180(roll / kDeg), wrap180(pitch / kDeg), wrap180(yaw / kDeg)};
}

Eigen::Quaterniond from_euler_deg(double roll, double pitch, double yaw) {
  return Eigen::AngleAxisd(yaw * kDeg, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(pitch * kDeg, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(roll * kDeg, Eigen::Vector3d::UnitX());
}

}  // namespace hexastack::airframe
