#include "hexastack/harness/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hexastack/errors.hpp"
#include "hexastack/esc/rig.hpp"
#include "hexastack/harness/config.hpp"
#include "hexastack/harness/report.hpp"
#include "hexastack/harness/scenario.hpp"
#include "hexastack/harness/simulation.hpp"

namespace hexastack::harness {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("hexastack");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  std::string level = "info";
  if (const char* env = std::getenv("HEXASTACK_LOG_LEVEL")) level = env;
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw UsageError("HEXASTACK_LOG_LEVEL must be error, info or debug, got '" + level + "'");
  }
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

SimConfig config_or_default(const std::string& path) { return path.empty() ? SimConfig{} : load_config(path); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("output: cannot write " + path.string());
  f << text;
  if (!f) throw ValidationError("output: write failed for " + path.string());
}

void emit(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hexastack: hexacopter software-in-the-loop simulator", "hexastack"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  std::string scenario_path, config_path, fidelity, out_dir = "out", out_file;
  std::uint64_t seed = 0;
  double speed = 4000.0, duration = 1.0;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write telemetry.csv, summary.txt, config.resolved.cfg");
  simulate->add_option("--scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--config", config_path, "Config file (built-in defaults when omitted)");
  auto* fid_opt = simulate->add_option("--fidelity", fidelity, "switched or averaged (overrides the scenario)");
  auto* seed_opt = simulate->add_option("--seed", seed, "Noise seed (overrides the scenario)");
  simulate->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Fit propeller and friction constants; write the calibrated config");
  calibrate->add_option("--config", config_path, "Config file")->required();
  calibrate->add_option("--out", out_file, "Output config (stdout when omitted)");

  auto* autotune = app.add_subcommand("autotune", "Relay-tune the attitude PIDs; write the tuned config");
  autotune->add_option("--config", config_path, "Config file")->required();
  autotune->add_option("--out", out_file, "Output config (stdout when omitted)");
  auto* tune_fid = autotune->add_option("--fidelity", fidelity, "switched or averaged (default averaged)");
  auto* tune_seed = autotune->add_option("--seed", seed, "Noise seed (default 1)");

  auto* bench = app.add_subcommand("esc-bench", "Single ESC and motor, switched tier; one CSV row per PWM tick");
  bench->add_option("--speed", speed, "Target speed, rpm")->required()->check(CLI::Range(0.0, 65535.0));
  bench->add_option("--duration", duration, "Run time, s")->required()->check(CLI::PositiveNumber);
  bench->add_option("--config", config_path, "Config file (built-in defaults when omitted)");
  bench->add_option("--out", out_file, "CSV file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    setup_logging();
    if (simulate->parsed()) {
      const SimConfig config = config_or_default(config_path);
      const Scenario scenario = load_scenario(scenario_path);
      RunOptions opts;
      if (*fid_opt) opts.fidelity = parse_fidelity(fidelity);
      if (*seed_opt) opts.seed = seed;
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path dir(out_dir);
      write_file(dir / "config.resolved.cfg", write_config(config));

      Simulation sim(config, scenario, opts);
      std::string fault;
      try {
        sim.run();
      } catch (const SimulationFault& e) {
        fault = e.what();
      }
      const RunSummary summary = sim.summary();
      std::ofstream csv(dir / "telemetry.csv", std::ios::binary);
      write_telemetry(csv, sim.log());
      std::ostringstream text;
      write_summary(text, summary, report(sim.log()));
      write_file(dir / "summary.txt", text.str());
      out << text.str();
      if (!fault.empty()) throw SimulationFault(fault);
      return kExitOk;
    }
    if (calibrate->parsed()) {
      SimConfig config = load_config(config_path);
      const auto result = airframe::calibrate_propulsion(config.motor, config.calibration_targets());
      apply_calibration(config, result);
      config.validate();
      spdlog::info("k_thrust={:.6g} k_drag={:.6g} friction={:.6g} full={:.2f} W/motor hover={:.2f} W",
                   result.prop.k_thrust, result.prop.k_drag, result.friction, result.full_power,
                   result.hover_power);
      emit(out_file, write_config(config), out);
      return kExitOk;
    }
    if (autotune->parsed()) {
      const SimConfig config = load_config(config_path);
      const auto tier = *tune_fid ? parse_fidelity(fidelity) : bldc::Tier::kAveraged;
      const auto rep = run_autotune(config, tier, *tune_seed ? seed : 1);
      emit(out_file, write_config(rep.tuned), out);
      return kExitOk;
    }
    if (bench->parsed()) {
      const SimConfig config = config_or_default(config_path);
      esc::RigConfig rc;
      rc.vdc = config.battery.voltage;
      rc.k_drag = config.propulsion.k_drag;
      esc::EscMotorRig rig(config.esc, config.motor, rc);
      rig.esc().arm();
      rig.esc().set_target(speed);
      std::ofstream file;
      if (!out_file.empty()) {
        file.open(out_file, std::ios::binary);
        if (!file) throw ValidationError("--out: cannot write " + out_file);
      }
      std::ostream& csv = out_file.empty() ? out : file;
      esc::write_bench_header(csv);
      rig.run(duration, [&](const esc::RigRecord& r) { esc::write_bench_row(csv, r); });
      if (rig.esc().faults() != 0) {
        throw SimulationFault("esc latched fault flags " + std::to_string(rig.esc().faults()));
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: kind=" << e.kind() << " message=" << one_line(e.what()) << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: kind=InternalError message=" << one_line(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace hexastack::harness
