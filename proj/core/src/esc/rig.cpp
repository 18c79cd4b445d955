#include "hexastack/esc/rig.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hexastack/errors.hpp"

namespace hexastack::esc {

EscMotorRig::EscMotorRig(EscConfig esc, bldc::MotorParams motor, RigConfig config)
    : esc_(esc, motor), params_(motor), config_(config) {
  if (!(config_.max_substep > 0.0)) throw std::invalid_argument("rig max_substep must be > 0");
}

double EscMotorRig::time() const {
  return static_cast<double>(period_) / esc_.config().pwm_frequency;
}

void EscMotorRig::advance(double t_from, double t_to, const bldc::PhaseDrive& drive,
                          double& charge) {
  const double span = t_to - t_from;
  if (span <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(span / config_.max_substep - 1e-9)));
  const double h = span / n;
  const bool on = drive.is_six_step() && drive.pwm_on(t_from + 0.5 * span);
  for (int k = 0; k < n; ++k) {
    bldc::StepOptions opts;
    opts.tier = bldc::Tier::kSwitched;
    const double w = motor_.omega_mech;
    opts.load_torque = config_.load_torque + config_.k_drag * w * std::abs(w);
    const double i0 = on ? motor_.phase_currents[static_cast<std::size_t>(drive.high_phase())] : 0.0;
    motor_ = bldc::step_electrical(motor_, drive, params_, h, opts);
    const double i1 = on ? motor_.phase_currents[static_cast<std::size_t>(drive.high_phase())] : 0.0;
    charge += 0.5 * (i0 + i1) * h;
  }
  motor_.timestamp = t_to;
}

void EscMotorRig::execute_commutation(double t) {
  const auto& st = esc_.state();
  if (config_.record_sectors && st.mode != Mode::kIdle) {
    SectorRecord rec;
    rec.t_start = t_sector_start_;
    rec.t_end = t;
    rec.t_zc = st.t_zero_cross;
    rec.speed_true = speed_rpm();
    rec.speed_est = st.speed_estimate;
    rec.sector = st.sector;
    rec.theta_end = bldc::electrical_angle(motor_, params_);
    rec.mode = st.mode;
    sectors_.push_back(rec);
  }
  esc_.commutate(t);
  t_sector_start_ = t;
}

RigRecord EscMotorRig::step() {
  const double period = 1.0 / esc_.config().pwm_frequency;
  const double t0 = static_cast<double>(period_) * period;
  const double t_end = static_cast<double>(period_ + 1) * period;
  const double vdc = config_.vdc;

  const int sector_before = esc_.state().sector;
  const Mode mode_before = esc_.state().mode;
  esc_.tick(t0, pending_sample_, vdc);
  pending_sample_.reset();
  if (esc_.state().sector != sector_before || esc_.state().mode != mode_before) {
    t_sector_start_ = t0;
  }

  RigRecord rec;
  rec.t = t0;
  rec.zc_flag = esc_.zc_detected_last_tick();

  bldc::PhaseDrive drive = esc_.drive(vdc);
  const double duty = drive.duty;
  const double t_edge = t0 + duty * period;
  const double t_sample = t0 + 0.5 * duty * period;
  bool sampled = !(duty > 0.0 && drive.is_six_step());

  double charge = 0.0;
  double t = t0;
  try {
    while (t < t_end) {
      if (auto tc = esc_.next_commutation_time(); tc && *tc <= t) {
        execute_commutation(t);
        drive = esc_.drive(vdc);
        continue;
      }
      if (!sampled && t >= t_sample) {
        const auto v = bldc::terminal_voltage(motor_, drive, params_, bldc::Tier::kSwitched);
        const int flt = drive.floating_phase();
        if (flt >= 0) {
          last_floating_v_ = v[static_cast<std::size_t>(flt)];
          pending_sample_ = EscSample{t, last_floating_v_, vdc, esc_.state().sector};
        }
        sampled = true;
      }
      double next = t_end;
      if (t_edge > t) next = std::min(next, t_edge);
      if (!sampled && t_sample > t) next = std::min(next, t_sample);
      if (auto tc = esc_.next_commutation_time(); tc && *tc > t) next = std::min(next, *tc);
      advance(t, next, drive, charge);
      t = next;
    }
  } catch (const CurrentLimitFault&) {
    esc_.latch_fault(kFaultOvercurrent);
    throw;
  } catch (const NonFiniteState&) {
    esc_.latch_fault(kFaultNonFinite);
    throw;
  }

  ++period_;
  const auto& st = esc_.state();
  rec.sector = st.sector;
  rec.duty = duty;
  rec.floating_v = last_floating_v_;
  rec.speed_est = st.speed_estimate;
  rec.speed_true = speed_rpm();
  rec.i_dc = charge / period;
  return rec;
}

void EscMotorRig::run(double duration, const std::function<void(const RigRecord&)>& sink) {
  const auto n = static_cast<std::uint64_t>(std::llround(duration * esc_.config().pwm_frequency));
  for (std::uint64_t k = 0; k < n; ++k) {
    const RigRecord rec = step();
    if (sink) sink(rec);
  }
}

void write_bench_header(std::ostream& out) {
  out << "t,sector,duty,floating_v,zc_flag,speed_est,speed_true,i_dc\n";
}

void write_bench_row(std::ostream& out, const RigRecord& row) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%.6f,%d,%.6f,%.6f,%d,%.3f,%.3f,%.6f\n", row.t, row.sector,
                row.duty, row.floating_v, row.zc_flag ? 1 : 0, row.speed_est, row.speed_true,
                row.i_dc);
  out << buf;
}

}  // namespace hexastack::esc
