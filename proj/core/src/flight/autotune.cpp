#include "hexastack/flight/autotune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::flight {
namespace {
constexpr double kPi = 3.14159265358979323846;

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
}  // namespace

AxisPid ziegler_nichols(double ku, double tu, double output_limit) {
  AxisPid pid;
  pid.kp = 0.6 * ku;
  pid.ki = 1.2 * ku / tu;
  pid.kd = 0.075 * ku * tu;
  pid.output_limit = output_limit;
  return pid;
}

RelayTuner::RelayTuner(RelayConfig config)
    : config_(config), output_(config.amplitude), hi_(-1e300), lo_(1e300) {
  if (!(config_.amplitude > 0.0)) {
    throw NoOscillation("relay amplitude must be > 0 to excite a limit cycle");
  }
  if (config_.measure_cycles < 1) throw std::invalid_argument("relay measure_cycles must be >= 1");
}

void RelayTuner::on_cycle(double t) {
  if (t_last_rise_ >= 0.0) {
    ++cycles_;
    if (cycles_ > config_.settle_cycles) {
      periods_.push_back(t - t_last_rise_);
      amplitudes_.push_back(0.5 * (hi_ - lo_));
    }
  }
  t_last_rise_ = t;
  hi_ = -1e300;
  lo_ = 1e300;
  if (static_cast<int>(periods_.size()) >= config_.measure_cycles) {
    const double m = mean(periods_);
    const auto [mn, mx] = std::minmax_element(periods_.begin(), periods_.end());
    if ((*mx - *mn) <= config_.max_spread * m) {
      done_ = true;
    } else {
      periods_.erase(periods_.begin());
      amplitudes_.erase(amplitudes_.begin());
    }
  }
}

double RelayTuner::update(double t, double measured) {
  if (done_) return 0.0;
  hi_ = std::max(hi_, measured);
  lo_ = std::min(lo_, measured);
  const double e = config_.setpoint - measured;
  if (output_ < 0.0 && e > config_.hysteresis) {
    output_ = config_.amplitude;
    on_cycle(t);
  } else if (output_ > 0.0 && e < -config_.hysteresis) {
    output_ = -config_.amplitude;
  }
  return done_ ? 0.0 : output_;
}

RelayResult RelayTuner::result() const {
  if (!done_) throw NoOscillation("relay experiment has not produced a steady limit cycle");
  RelayResult r;
  r.tu = mean(periods_);
  r.amplitude = mean(amplitudes_);
  const double eps = config_.hysteresis;
  const double a_eff = std::sqrt(std::max(r.amplitude * r.amplitude - eps * eps, 1e-300));
  r.ku = 4.0 * config_.amplitude / (kPi * a_eff);
  r.gains = ziegler_nichols(r.ku, r.tu);
  return r;
}

RelayResult autotune(const RelayConfig& config, const std::function<double(double)>& plant,
                     double dt, double initial_measurement) {
  if (!(dt > 0.0)) throw std::invalid_argument("autotune: dt must be > 0");
  RelayTuner tuner(config);
  double y = initial_measurement;
  const auto steps = static_cast<long>(std::ceil(config.t_max / dt));
  for (long k = 0; k <= steps && !tuner.done(); ++k) {
    const double u = tuner.update(static_cast<double>(k) * dt, y);
    if (tuner.done()) break;
    y = plant(u);
    if (!std::isfinite(y)) throw NoOscillation("plant output became non-finite during relay test");
  }
  if (!tuner.done()) {
    throw NoOscillation("no steady limit cycle within " + std::to_string(config.t_max) + " s");
  }
  return tuner.result();
}

}  // namespace hexastack::flight
