#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hexastack/errors.hpp"
#include "hexastack/harness/cli.hpp"
#include "hexastack/harness/config.hpp"
#include "hexastack/harness/report.hpp"
#include "hexastack/harness/scenario.hpp"
#include "hexastack/harness/sectioned_text.hpp"
#include "hexastack/harness/simulation.hpp"
#include "hexastack/harness/telemetry.hpp"

using namespace hexastack;
using namespace hexastack::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = HEXASTACK_SOURCE_DIR;

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Scenario short_hover(double duration = 4.0) {
  Scenario s = parse_scenario(parse_sectioned_text(
      "[scenario]\nname = short\nduration = 4\nseed = 3\n"
      "[timeline]\n0.2 = ARM\n0.5 = TAKEOFF 1\n3.0 = YAW_TO 10\n"));
  s.duration = duration;
  return s;
}

SimConfig noisy_config() { return load_config(kSource / "configs/default.cfg"); }

std::string csv(const TelemetryLog& log) {
  std::ostringstream os;
  write_telemetry(os, log);
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hexastack_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int dispatch(std::vector<std::string> args, std::string& out, std::string& err) {
  args.insert(args.begin(), "hexastack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  err = e.str();
  return code;
}

}  // namespace

// ---- sectioned text ------------------------------------------------------

TEST(SectionedText, ParsesSectionsKeysAndComments) {
  const Document d = parse_sectioned_text("# top\n[a]\nx = 1  # trailing\n\n[b]\ny=two words\n");
  ASSERT_EQ(d.sections.size(), 2u);
  EXPECT_EQ(d.sections[0].entries[0].key, "x");
  EXPECT_EQ(d.sections[0].entries[0].value, "1");
  EXPECT_EQ(d.sections[0].entries[0].line, 3);
  EXPECT_EQ(d.find("b")->entries[0].value, "two words");
  EXPECT_EQ(d.find("c"), nullptr);
}

TEST(SectionedText, ErrorsCarryTheLine) {
  EXPECT_NE(what_of([] { parse_sectioned_text("[a]\nx = 1\nnonsense\n", "f.cfg"); }).find("f.cfg:3"),
            std::string::npos);
  EXPECT_THROW(parse_sectioned_text("x = 1\n"), ParseError);
  EXPECT_THROW(parse_sectioned_text("[a\n"), ParseError);
  EXPECT_THROW(parse_sectioned_text("[a]\n[a]\n"), ParseError);
  EXPECT_THROW(parse_sectioned_text("[a]\nx =\n"), ParseError);
}

TEST(SectionedText, MissingFileIsParseError) {
  EXPECT_THROW(load_sectioned_file("/nonexistent/hexastack.cfg"), ParseError);
}

// ---- config -------------------------------------------------------------

TEST(Config, DefaultFileLoads) {
  const SimConfig c = noisy_config();
  EXPECT_DOUBLE_EQ(c.motor.kv, 530.0);
  EXPECT_DOUBLE_EQ(c.vehicle.mass_empty, 1.8);
  EXPECT_DOUBLE_EQ(c.battery.capacity_wh, 97.44);
  EXPECT_DOUBLE_EQ(c.battery.voltage, 16.8);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeyIsNamed) {
  const std::string msg = what_of([] { parse_config(parse_sectioned_text("[motor]\nkvv = 530\n")); });
  EXPECT_NE(msg.find("motor.kvv"), std::string::npos) << msg;
  EXPECT_THROW(parse_config(parse_sectioned_text("[motor]\nkvv = 530\n")), ValidationError);
  EXPECT_THROW(parse_config(parse_sectioned_text("[engine]\nkv = 530\n")), ValidationError);
}

TEST(Config, BadNumberIsParseError) {
  EXPECT_THROW(parse_config(parse_sectioned_text("[motor]\nkv = fast\n")), ParseError);
}

TEST(Config, InvariantViolationIsValidationError) {
  const std::string msg =
      what_of([] { parse_config(parse_sectioned_text("[vehicle]\nmass_empty = -1\n")); });
  EXPECT_NE(msg.find("mass_empty"), std::string::npos) << msg;
}

TEST(Config, WriteParseRoundTrip) {
  const SimConfig c = noisy_config();
  const std::string text = write_config(c);
  const SimConfig back = parse_config(parse_sectioned_text(text));
  EXPECT_EQ(write_config(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashTracksContent) {
  SimConfig a, b;
  b.vehicle.mass_empty = 2.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, HoverSpeedCarriesTheMass) {
  SimConfig c;
  c.flight.hover_rpm = 0.0;
  const double w = c.hover_rpm(1.0) * 2.0 * 3.14159265358979323846 / 60.0;
  EXPECT_NEAR(6.0 * airframe::prop_forces(w, c.propulsion).thrust, 2.8 * 9.80665, 1e-6);
}

// ---- scenario -----------------------------------------------------------

TEST(Scenario, ShippedScenariosLoad) {
  for (const auto& entry : fs::directory_iterator(kSource / "scenarios")) {
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
  }
}

TEST(Scenario, PayloadOutOfRange) {
  EXPECT_THROW(parse_scenario(parse_sectioned_text("[scenario]\npayload_kg = 5\n[timeline]\n")),
               ValidationError);
}

TEST(Scenario, TimelineMustIncrease) {
  EXPECT_THROW(parse_scenario(parse_sectioned_text(
                   "[scenario]\nduration = 10\n[timeline]\n2 = ARM\n1 = TAKEOFF 2\n")),
               ValidationError);
}

TEST(Scenario, AttitudeBeforeTakeoffRejected) {
  EXPECT_THROW(parse_scenario(parse_sectioned_text(
                   "[scenario]\nduration = 10\n[timeline]\n1 = ARM\n2 = SET_ATTITUDE 5 0 0\n")),
               ValidationError);
}

TEST(Scenario, WrongArityAndUnknownEvent) {
  EXPECT_THROW(parse_scenario(parse_sectioned_text("[scenario]\n[timeline]\n1 = TAKEOFF\n")),
               ValidationError);
  EXPECT_ANY_THROW(parse_scenario(parse_sectioned_text("[scenario]\n[timeline]\n1 = BARREL_ROLL\n")));
}

TEST(Scenario, FidelityNames) {
  EXPECT_EQ(parse_fidelity("SWITCHED"), bldc::Tier::kSwitched);
  EXPECT_EQ(parse_fidelity("averaged"), bldc::Tier::kAveraged);
  EXPECT_THROW(parse_fidelity("medium"), ValidationError);
}

// ---- telemetry ----------------------------------------------------------

TEST(Telemetry, HeaderCarriesProvenance) {
  TelemetryLog log;
  log.meta = {42, 0xabcdefULL, version(), "demo", "averaged"};
  const std::string text = csv(log);
  const std::string first = text.substr(0, text.find('\n'));
  EXPECT_EQ(first.rfind(std::string("# ") + kTelemetryFormat, 0), 0u) << first;
  EXPECT_NE(first.find("seed=42"), std::string::npos);
  EXPECT_NE(first.find("config_hash=0000000000abcdef"), std::string::npos);
  EXPECT_NE(first.find("scenario=demo"), std::string::npos);
}

TEST(Telemetry, RoundTrip) {
  TelemetryLog log;
  log.meta = {7, 99, version(), "rt", "switched"};
  TelemetryRow r;
  r.t = 1.25;
  r.source = "mission";
  r.att_true = {1.5, -2.25, 179.0};
  r.motor_rpm = {4000, 4001, 4002, 4003, 4004, 4005};
  r.power_w = 171.5;
  r.energy_wh = 90.125;
  log.rows.push_back(r);
  TelemetryRow ev;
  ev.t = 1.25;
  ev.kind = RowKind::kEvent;
  ev.note = "TAKEOFF 2";
  log.rows.push_back(ev);

  std::istringstream in(csv(log));
  const TelemetryLog back = read_telemetry(in);
  EXPECT_EQ(back.meta.seed, 7u);
  EXPECT_EQ(back.meta.config_hash, 99u);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].att_true, r.att_true);
  EXPECT_EQ(back.rows[0].motor_rpm, r.motor_rpm);
  EXPECT_EQ(back.rows[0].power_w, 171.5);
  EXPECT_EQ(back.rows[1].kind, RowKind::kEvent);
  EXPECT_EQ(back.rows[1].note, "TAKEOFF 2");
  EXPECT_EQ(csv(back), csv(log));
}

TEST(Telemetry, BadHeaderIsParseError) {
  std::istringstream in("t,kind\n1,step\n");
  EXPECT_THROW(read_telemetry(in), ParseError);
}

// ---- report -------------------------------------------------------------

namespace {
TelemetryLog synthetic(const std::function<void(TelemetryRow&)>& fill, int n, double dt) {
  TelemetryLog log;
  for (int i = 0; i < n; ++i) {
    TelemetryRow r;
    r.t = i * dt;
    fill(r);
    log.rows.push_back(r);
  }
  return log;
}
}  // namespace

TEST(Report, ConstantPowerMeanIsExact) {
  const TelemetryLog log = synthetic([](TelemetryRow& r) { r.power_w = 170.0; }, 1000, 0.002);
  EXPECT_EQ(report(log).mean_power_w, 170.0);
}

TEST(Report, EnduranceIsLastTimeWhenBatteryEmpties) {
  TelemetryLog log = synthetic(
      [](TelemetryRow& r) {
        r.power_w = 100.0;
        r.energy_wh = std::max(0.0, 1.0 - r.t * 100.0 / 3600.0);
      },
      20000, 0.002);
  log.rows.resize(18001);  // t = 36 s, energy exactly 0
  ASSERT_EQ(log.rows.back().energy_wh, 0.0);
  const Report rep = report(log);
  ASSERT_TRUE(rep.endurance.has_value());
  EXPECT_DOUBLE_EQ(*rep.endurance, log.rows.back().t);
  EXPECT_NEAR(rep.energy_used_wh, 1.0, 1e-12);
}

TEST(Report, NoEnduranceWhileCharged) {
  const TelemetryLog log = synthetic([](TelemetryRow& r) { r.energy_wh = 50.0; }, 10, 0.002);
  EXPECT_FALSE(report(log).endurance.has_value());
}

TEST(Report, EmptyLogThrows) {
  EXPECT_THROW(report(TelemetryLog{}), EmptyLog);
  EXPECT_THROW(step_response({}, {}, 0.0, 0.0, 1.0), EmptyLog);
}

TEST(Report, FirstOrderRiseTime) {
  // 10-90% rise of 1 - exp(-t/tau) is tau ln 9.
  const double tau = 0.3;
  std::vector<double> t, y;
  for (int i = 0; i <= 5000; ++i) {
    t.push_back(1.0 + i * 1e-3);
    y.push_back(10.0 * (1.0 - std::exp(-(i * 1e-3) / tau)));
  }
  const StepMetrics m = step_response(t, y, 1.0, 0.0, 10.0);
  EXPECT_NEAR(m.rise_time, tau * std::log(9.0), 0.02 * tau * std::log(9.0));
  EXPECT_NEAR(m.overshoot, 0.0, 1e-12);
  // 5% band is reached after tau ln 20.
  EXPECT_NEAR(m.settling_time, tau * std::log(20.0), 2e-3);
  EXPECT_TRUE(m.settled);
}

TEST(Report, UnderdampedOvershoot) {
  // Second-order step, zeta 0.5: overshoot exp(-pi zeta / sqrt(1 - zeta^2)).
  const double zeta = 0.5, wn = 10.0, wd = wn * std::sqrt(1 - zeta * zeta);
  std::vector<double> t, y;
  for (int i = 0; i <= 4000; ++i) {
    const double s = i * 1e-3;
    t.push_back(s);
    y.push_back(1.0 - std::exp(-zeta * wn * s) *
                          (std::cos(wd * s) + zeta / std::sqrt(1 - zeta * zeta) * std::sin(wd * s)));
  }
  const StepMetrics m = step_response(t, y, 0.0, 0.0, 1.0);
  EXPECT_NEAR(m.overshoot, std::exp(-3.14159265358979323846 * zeta / std::sqrt(1 - zeta * zeta)), 1e-4);
}

TEST(Report, NeverReachingNinetyPercentGivesNan) {
  const StepMetrics m = step_response({0, 1, 2}, {0, 0.2, 0.5}, 0.0, 0.0, 1.0);
  EXPECT_TRUE(std::isnan(m.rise_time));
  EXPECT_FALSE(m.settled);
}

// ---- simulation ---------------------------------------------------------

TEST(Simulation, EventsBecomeMarkerRowsBeforeThatTicksControl) {
  const RunResult r = run(short_hover(), SimConfig{});
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < r.log.rows.size(); ++i) {
    const auto& row = r.log.rows[i];
    if (row.kind != RowKind::kEvent) continue;
    notes.push_back(row.note);
    if (i + 1 < r.log.rows.size() && r.log.rows[i + 1].kind == RowKind::kStep) {
      EXPECT_NEAR(r.log.rows[i + 1].t, row.t, 1e-9) << row.note;
    }
  }
  EXPECT_EQ(notes, (std::vector<std::string>{"ARM", "TAKEOFF 1", "YAW_TO 10"}));
}

TEST(Simulation, RatesMatchTheSchedule) {
  const RunResult r = run(short_hover(), SimConfig{});
  EXPECT_DOUBLE_EQ(r.summary.sim_time, 4.0);
  EXPECT_EQ(r.summary.end_reason, "duration");
  // 200 Hz IMU over 4 s.
  EXPECT_NEAR(static_cast<double>(r.summary.imu_frames), 800.0, 2.0);
  // 500 Hz control after arming, six SET_SPEED frames each, plus polling.
  EXPECT_GE(r.summary.bus_transactions, 6u * 1900u);
  std::size_t steps = 0;
  for (const auto& row : r.log.rows) steps += row.kind == RowKind::kStep;
  EXPECT_EQ(steps, 2000u);
}

TEST(Simulation, TakesOffAndHolds) {
  const RunResult r = run(short_hover(6.0), SimConfig{});
  EXPECT_GT(r.summary.max_altitude, 0.8);
  EXPECT_LT(r.summary.max_altitude, 1.6);
  EXPECT_NEAR(r.log.rows.back().position[2], 1.0, 0.5);
}

TEST(Simulation, SameSeedIsByteIdentical) {
  const SimConfig cfg = noisy_config();
  EXPECT_EQ(csv(run(short_hover(), cfg).log), csv(run(short_hover(), cfg).log));
}

TEST(Simulation, DifferentSeedDiffers) {
  const SimConfig cfg = noisy_config();
  RunOptions other;
  other.seed = 4;
  EXPECT_NE(csv(run(short_hover(), cfg).log), csv(run(short_hover(), cfg, other).log));
}

TEST(Simulation, EnergyBookkeepingAgrees) {
  const RunResult r = run(short_hover(), SimConfig{});
  const double drop = 97.44 - r.log.rows.back().energy_wh;
  EXPECT_NEAR(drop, r.summary.energy_used_wh, 1e-3 * r.summary.energy_used_wh);
  EXPECT_NEAR(r.summary.mean_power_w * r.summary.sim_time / 3600.0, r.summary.energy_used_wh,
              1e-3 * r.summary.energy_used_wh);
}

// ---- cli ----------------------------------------------------------------

TEST(Cli, MissingSubcommandIsUsageError) {
  std::string out, err;
  EXPECT_EQ(dispatch({}, out, err), kExitUsage);
}

TEST(Cli, MissingRequiredOptionIsUsageError) {
  std::string out, err;
  EXPECT_EQ(dispatch({"simulate"}, out, err), kExitUsage);
  EXPECT_EQ(dispatch({"esc-bench", "--speed", "4000"}, out, err), kExitUsage);
  EXPECT_EQ(dispatch({"esc-bench", "--speed", "4000", "--duration", "-1"}, out, err), kExitUsage);
  EXPECT_EQ(dispatch({"calibrate", "--bogus"}, out, err), kExitUsage);
}

TEST(Cli, MissingFileIsMachineReadableFailure) {
  std::string out, err;
  EXPECT_EQ(dispatch({"calibrate", "--config", "/nonexistent.cfg"}, out, err), kExitFailure);
  EXPECT_EQ(err.rfind("error: kind=ParseError message=", 0), 0u) << err;
}

TEST(Cli, InvalidScenarioIsValidationFailure) {
  TempDir dir;
  const fs::path scn = dir.path / "bad.scn";
  std::ofstream(scn) << "[scenario]\npayload_kg = 9\n[timeline]\n";
  std::string out, err;
  EXPECT_EQ(dispatch({"simulate", "--scenario", scn.string(), "--out", (dir.path / "o").string()},
                     out, err),
            kExitFailure);
  EXPECT_EQ(err.rfind("error: kind=ValidationError", 0), 0u) << err;
}

TEST(Cli, EscBenchWritesTwentyThousandRowsPerSecond) {
  TempDir dir;
  const fs::path csv_path = dir.path / "bench.csv";
  std::string out, err;
  ASSERT_EQ(dispatch({"esc-bench", "--speed", "4000", "--duration", "1", "--out", csv_path.string()},
                     out, err),
            kExitOk)
      << err;
  std::ifstream in(csv_path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && !std::isalpha(static_cast<unsigned char>(line[0]))) ++rows;
  }
  EXPECT_EQ(rows, 20000);
}

TEST(Cli, SimulateWritesOutputs) {
  TempDir dir;
  const fs::path scn = dir.path / "s.scn";
  std::ofstream(scn) << "[scenario]\nduration = 1.5\n[timeline]\n0.2 = ARM\n0.5 = TAKEOFF 1\n";
  std::string out, err;
  ASSERT_EQ(dispatch({"simulate", "--scenario", scn.string(), "--seed", "9", "--out",
                      (dir.path / "o").string()},
                     out, err),
            kExitOk)
      << err;
  EXPECT_TRUE(fs::exists(dir.path / "o" / "telemetry.csv"));
  EXPECT_TRUE(fs::exists(dir.path / "o" / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir.path / "o" / "config.resolved.cfg"));
  std::ifstream in(dir.path / "o" / "telemetry.csv");
  std::string first;
  std::getline(in, first);
  EXPECT_NE(first.find("seed=9"), std::string::npos);
}

TEST(Cli, CalibrateIsAFixedPointOfTheShippedConfig) {
  TempDir dir;
  const fs::path out_cfg = dir.path / "cal.cfg";
  std::string out, err;
  ASSERT_EQ(dispatch({"calibrate", "--config", (kSource / "configs/default.cfg").string(), "--out",
                      out_cfg.string()},
                     out, err),
            kExitOk)
      << err;
  const SimConfig cal = load_config(out_cfg);
  const SimConfig ref = noisy_config();
  EXPECT_NEAR(cal.propulsion.k_thrust, ref.propulsion.k_thrust, 1e-12 * ref.propulsion.k_thrust);
  EXPECT_NEAR(cal.motor.friction_coeff, ref.motor.friction_coeff, 1e-12);
}

TEST(Cli, VersionFlag) {
  std::string out, err;
  EXPECT_EQ(dispatch({"--version"}, out, err), kExitOk);
  EXPECT_NE(out.find(version()), std::string::npos);
}
