#include "hexastack/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hexastack/errors.hpp"
#include "hexastack/harness/config.hpp"

namespace hexastack::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// First crossing of `level` by the normalised progress p, interpolated.
double crossing(const std::vector<double>& t, const std::vector<double>& p, double level) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < level) continue;
    if (i == 0) return t[0];
    return t[i - 1] + (level - p[i - 1]) / (p[i] - p[i - 1]) * (t[i] - t[i - 1]);
  }
  return kNaN;
}

const char* const kAxis[] = {"roll", "pitch", "yaw"};

}  // namespace

StepMetrics step_response(const std::vector<double>& t, const std::vector<double>& y, double t_step,
                          double from, double to, double band) {
  if (t.size() != y.size()) throw std::invalid_argument("step_response: size mismatch");
  std::vector<double> ts, p;
  const double span = to - from;
  if (span == 0.0) throw std::invalid_argument("step_response: zero step");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_step) {
      ts.push_back(t[i] - t_step);
      p.push_back((y[i] - from) / span);  // 0 before, 1 at the target
    }
  }
  if (ts.empty()) throw EmptyLog("no samples after the step");

  StepMetrics m;
  m.t_step = t_step;
  m.from = from;
  m.to = to;
  const double t10 = crossing(ts, p, 0.1);
  const double t90 = crossing(ts, p, 0.9);
  m.rise_time = t90 - t10;
  m.overshoot = std::max(0.0, *std::max_element(p.begin(), p.end()) - 1.0);
  m.settling_time = 0.0;
  for (std::size_t i = ts.size(); i-- > 0;) {
    if (std::abs(p[i] - 1.0) > band) {
      m.settling_time = i + 1 < ts.size() ? ts[i + 1] : ts[i];
      break;
    }
  }
  m.settled = std::abs(p.back() - 1.0) <= band;
  return m;
}

std::vector<StepMetrics> attitude_steps(const TelemetryLog& log, int axis) {
  const auto a = static_cast<std::size_t>(axis);
  // Step times: event rows whose raw setpoint differs from the previous one.
  struct Step {
    double t, from, to;
  };
  std::vector<Step> steps;
  double current = 0.0;
  for (const auto& r : log.rows) {
    if (r.kind != RowKind::kEvent) continue;
    const auto& n = r.note;
    double v[3];
    double target = current;
    if (std::sscanf(n.c_str(), "SET_ATTITUDE %lf %lf %lf", &v[0], &v[1], &v[2]) == 3) {
      target = v[a];
    } else if (axis == 2 && std::sscanf(n.c_str(), "YAW_TO %lf", &v[0]) == 1) {
      target = v[0];
    } else if (axis != 2 && (n.rfind("HOVER", 0) == 0 || n.rfind("LAND", 0) == 0)) {
      target = 0.0;
    } else {
      continue;
    }
    if (target != current) steps.push_back({r.t, current, target});
    current = target;
  }
  std::vector<StepMetrics> out;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double t_end = k + 1 < steps.size() ? steps[k + 1].t : std::numeric_limits<double>::infinity();
    std::vector<double> ts, ys;
    for (const auto& r : log.rows) {
      if (r.kind == RowKind::kStep && r.t >= steps[k].t && r.t < t_end) {
        ts.push_back(r.t);
        ys.push_back(r.att_true[a]);
      }
    }
    if (ts.empty()) continue;
    auto m = step_response(ts, ys, steps[k].t, steps[k].from, steps[k].to);
    m.label = std::string(kAxis[a]) + " " + format_double(steps[k].from) + " -> " + format_double(steps[k].to) +
              " at t=" + format_double(steps[k].t);
    out.push_back(m);
  }
  return out;
}

Report report(const TelemetryLog& log) {
  std::size_t n = 0;
  double sum = 0.0;
  const TelemetryRow* first = nullptr;
  for (const auto& r : log.rows) {
    if (r.kind != RowKind::kStep) continue;
    if (first == nullptr) first = &r;
    sum += r.power_w;
    ++n;
  }
  if (n == 0) throw EmptyLog("telemetry log has no step rows");
  Report rep;
  const TelemetryRow& tail = log.rows.back();
  rep.duration = tail.t - first->t;
  rep.mean_power_w = sum / static_cast<double>(n);
  rep.energy_used_wh = first->energy_wh - tail.energy_wh;
  if (tail.energy_wh <= 0.0) rep.endurance = tail.t;
  for (int axis = 0; axis < 3; ++axis) {
    auto steps = attitude_steps(log, axis);
    rep.maneuvers.insert(rep.maneuvers.end(), steps.begin(), steps.end());
  }
  return rep;
}

void write_summary(std::ostream& out, const RunSummary& s, const Report& r) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(s.config_hash));
  out << "scenario = " << s.scenario << "\n"
      << "fidelity = " << s.fidelity << "\n"
      << "seed = " << s.seed << "\n"
      << "config_hash = " << buf << "\n"
      << "version = " << version() << "\n"
      << "end_reason = " << s.end_reason << "\n";
  if (!s.fault.empty()) out << "fault = " << s.fault << "\n";
  out << "sim_time_s = " << num(s.sim_time) << "\n"
      << "energy_used_wh = " << num(s.energy_used_wh) << "\n"
      << "mean_power_w = " << num(s.mean_power_w) << "\n"
      << "hold_time_s = " << num(s.hold_time) << "\n"
      << "hold_power_w = " << num(s.hold_power_w) << "\n"
      << "max_altitude_m = " << num(s.max_altitude) << "\n"
      << "depleted = " << (s.depleted ? "true" : "false") << "\n";
  if (s.depleted) {
    out << "endurance_s = " << num(s.depletion_time) << "\n"
        << "endurance_min = " << num(s.depletion_time / 60.0) << "\n";
  }
  out << "bus_transactions = " << s.bus_transactions << "\n"
      << "imu_frames = " << s.imu_frames << "\n"
      << "imu_dropped = " << s.imu_dropped << "\n"
      << "telemetry_mean_power_w = " << num(r.mean_power_w) << "\n";
  for (std::size_t i = 0; i < r.maneuvers.size(); ++i) {
    const auto& m = r.maneuvers[i];
    out << "maneuver." << i << " = " << m.label << "; rise_s " << num(m.rise_time) << "; overshoot_pct "
        << num(100.0 * m.overshoot) << "; settling_s " << num(m.settling_time) << "; settled "
        << (m.settled ? "yes" : "no") << "\n";
  }
}

}  // namespace hexastack::harness
