#include <benchmark/benchmark.h>

#include "hexastack/harness/config.hpp"
#include "hexastack/harness/scenario.hpp"
#include "hexastack/harness/sectioned_text.hpp"
#include "hexastack/harness/simulation.hpp"

using namespace hexastack;
using namespace hexastack::harness;

namespace {

Scenario hover(bldc::Tier tier) {
  Scenario s = parse_scenario(parse_sectioned_text(
      "[scenario]\nname = bench\nduration = 3600\ntelemetry_every = 50\n"
      "[timeline]\n0.1 = ARM\n0.3 = TAKEOFF 2\n"));
  s.fidelity = tier;
  return s;
}

// Scheduler ticks of a hovering vehicle, 1 ms of simulated time each.
void run_ticks(benchmark::State& state, bldc::Tier tier) {
  Simulation sim(SimConfig{}, hover(tier));
  for (int i = 0; i < 3000; ++i) sim.tick();  // past takeoff
  for (auto _ : state) sim.tick();
  state.counters["realtime_factor"] =
      benchmark::Counter(static_cast<double>(state.iterations()) * kTick, benchmark::Counter::kIsRate);
}

}  // namespace

static void BM_SimTickAveraged(benchmark::State& state) { run_ticks(state, bldc::Tier::kAveraged); }
BENCHMARK(BM_SimTickAveraged);

static void BM_SimTickSwitched(benchmark::State& state) { run_ticks(state, bldc::Tier::kSwitched); }
BENCHMARK(BM_SimTickSwitched);

static void BM_ConfigParse(benchmark::State& state) {
  const std::string text = write_config(SimConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(parse_config(parse_sectioned_text(text)));
}
BENCHMARK(BM_ConfigParse);

BENCHMARK_MAIN();
