#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hexastack/comm/frames.hpp"
#include "hexastack/errors.hpp"
#include "hexastack/esc/commutation.hpp"
#include "hexastack/esc/firmware.hpp"
#include "hexastack/esc/rig.hpp"

using namespace hexastack;
using namespace hexastack::esc;
using bldc::Connection;

namespace {

constexpr double kTick = 1.0 / 20000.0;
constexpr double kPropDrag = 2.168e-7;  // N*m per (rad/s)^2

int count_role(int phase, Connection role) {
  int n = 0;
  for (int s = 0; s < 6; ++s) n += commutation_table(s)[static_cast<std::size_t>(phase)] == role;
  return n;
}

// Rig spun up to `rpm` under propeller load and left to settle.
EscMotorRig settled_rig(double rpm, double seconds = 1.5) {
  RigConfig rc;
  rc.k_drag = kPropDrag;
  rc.record_sectors = true;
  EscMotorRig rig(EscConfig{}, bldc::MotorParams{}, rc);
  rig.esc().arm();
  rig.esc().set_target(rpm);
  rig.run(seconds);
  return rig;
}

std::vector<SectorRecord> last_sectors(const EscMotorRig& rig, std::size_t n) {
  const auto& all = rig.sectors();
  return {all.end() - static_cast<std::ptrdiff_t>(std::min(n, all.size())), all.end()};
}

}  // namespace

// ----------------------------------------------------------- commutation table

TEST(CommutationTable, SectorZeroDrivesAHighBLow) {
  const auto t = commutation_table(0);
  EXPECT_EQ(t[0], Connection::kHigh);
  EXPECT_EQ(t[1], Connection::kLow);
  EXPECT_EQ(t[2], Connection::kFloat);
}

TEST(CommutationTable, OppositeSectorsAreComplements) {
  auto flip = [](Connection c) {
    return c == Connection::kHigh ? Connection::kLow
           : c == Connection::kLow ? Connection::kHigh
                                   : Connection::kFloat;
  };
  for (int s = 0; s < 3; ++s) {
    const auto a = commutation_table(s);
    const auto b = commutation_table(s + 3);
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(b[p], flip(a[p]));
  }
  const auto t3 = commutation_table(3);
  EXPECT_EQ(t3[0], Connection::kLow);
  EXPECT_EQ(t3[1], Connection::kHigh);
  EXPECT_EQ(t3[2], Connection::kFloat);
}

TEST(CommutationTable, EachPhaseTakesEachRoleTwice) {
  for (int p = 0; p < 3; ++p) {
    EXPECT_EQ(count_role(p, Connection::kHigh), 2);
    EXPECT_EQ(count_role(p, Connection::kLow), 2);
    EXPECT_EQ(count_role(p, Connection::kFloat), 2);
  }
}

TEST(CommutationTable, ConsecutiveSectorsKeepOnePhaseAndSwapTwo) {
  for (int s = 0; s < 6; ++s) {
    const auto a = commutation_table(s);
    const auto b = commutation_table((s + 1) % 6);
    int same = 0;
    for (std::size_t p = 0; p < 3; ++p) same += a[p] == b[p];
    EXPECT_EQ(same, 1) << "sector " << s;
  }
}

TEST(CommutationTable, OutOfRangeSectorThrows) {
  EXPECT_THROW(commutation_table(-1), InvalidSector);
  EXPECT_THROW(commutation_table(6), InvalidSector);
}

TEST(CommutationTable, FloatingPhaseDirectionMatchesBackEmf) {
  // Sector k spans electrical [30 + 60k, 90 + 60k] degrees.
  for (int s = 0; s < 6; ++s) {
    const auto t = commutation_table(s);
    const auto f = static_cast<std::size_t>(std::find(t.begin(), t.end(), Connection::kFloat) - t.begin());
    const double a0 = (30.0 + 60.0 * s + 5.0) * bldc::kPi / 180.0;
    const double a1 = (90.0 + 60.0 * s - 5.0) * bldc::kPi / 180.0;
    const bool rises = bldc::bemf_shape(a1)[f] > bldc::bemf_shape(a0)[f];
    EXPECT_EQ(floating_rises(s), rises) << "sector " << s;
  }
}

// ---------------------------------------------------------------- comparator

TEST(SampleComparator, Examples) {
  EXPECT_TRUE(sample_comparator(9.0, 16.8, true));
  EXPECT_FALSE(sample_comparator(7.0, 16.8, true));
  EXPECT_TRUE(sample_comparator(8.4, 16.8, true));
  EXPECT_TRUE(sample_comparator(8.4, 16.8, false));
  EXPECT_TRUE(sample_comparator(7.0, 16.8, false));
  EXPECT_FALSE(sample_comparator(9.0, 16.8, false));
}

// ------------------------------------------------------------ majority filter

TEST(MajorityFilter, Examples) {
  EXPECT_TRUE(majority_filter(std::vector<bool>{true, true, true, false, true}));
  EXPECT_FALSE(majority_filter(std::vector<bool>{false, false, true, false, false}));
}

TEST(MajorityFilter, EqualsPopcountOnAllWindows) {
  for (int w : {1, 3, 5, 7}) {
    for (unsigned bits = 0; bits < (1U << w); ++bits) {
      std::vector<bool> window(static_cast<std::size_t>(w));
      for (int k = 0; k < w; ++k) window[static_cast<std::size_t>(k)] = ((bits >> k) & 1U) != 0;
      ASSERT_EQ(majority_filter(window), std::popcount(bits) * 2 > w) << "W=" << w << " bits=" << bits;
    }
  }
}

TEST(MajorityFilter, EqualsPopcountOnRandomWindows) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<unsigned> bits(0, 31);
  for (int n = 0; n < 1000; ++n) {
    const unsigned b = bits(rng);
    std::vector<bool> window(5);
    for (int k = 0; k < 5; ++k) window[static_cast<std::size_t>(k)] = ((b >> k) & 1U) != 0;
    ASSERT_EQ(majority_filter(window), std::popcount(b) >= 3);
  }
}

TEST(MajorityFilter, SingleGlitchNeverTriggers) {
  for (int pos = 0; pos < 5; ++pos) {
    std::vector<bool> window(5, false);
    window[static_cast<std::size_t>(pos)] = true;
    EXPECT_FALSE(majority_filter(window));
  }
}

TEST(MajorityFilter, EvenWindowIsRejected) {
  EXPECT_THROW(majority_filter(std::vector<bool>{true, true, false, false}), std::invalid_argument);
}

// ------------------------------------------------------------------------ PI

TEST(PiSpeedUpdate, ZeroErrorPassesIntegrator) {
  const auto out = pi_speed_update({5e-5, 2e-4, 0.4}, 4000.0, 4000.0, 1e-3);
  EXPECT_DOUBLE_EQ(out.duty, 0.4);
  EXPECT_DOUBLE_EQ(out.pi.integrator, 0.4);
}

TEST(PiSpeedUpdate, ProportionalTerm) {
  const auto out = pi_speed_update({1e-4, 0.0, 0.0}, 2000.0, 0.0, 1e-3);
  EXPECT_DOUBLE_EQ(out.duty, 0.2);
}

TEST(PiSpeedUpdate, IntegratorAccumulatesAndClamps) {
  PIState pi{0.0, 1e-3, 0.0};
  pi = pi_speed_update(pi, 1000.0, 0.0, 0.1).pi;
  EXPECT_DOUBLE_EQ(pi.integrator, 0.1);
  for (int k = 0; k < 100; ++k) pi = pi_speed_update(pi, 1000.0, 0.0, 0.1).pi;
  EXPECT_DOUBLE_EQ(pi.integrator, 1.0);
  for (int k = 0; k < 100; ++k) pi = pi_speed_update(pi, 0.0, 1000.0, 0.1).pi;
  EXPECT_DOUBLE_EQ(pi.integrator, 0.0);
}

TEST(PiSpeedUpdate, DutyStaysInUnitIntervalUnderRandomSequences) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> gain(0.0, 1e-2), err(-20000.0, 20000.0), dt(1e-4, 1e-1);
  for (int run = 0; run < 200; ++run) {
    PIState pi{gain(rng), gain(rng), 0.0};
    for (int k = 0; k < 200; ++k) {
      const auto out = pi_speed_update(pi, err(rng), 0.0, dt(rng));
      ASSERT_GE(out.duty, 0.0);
      ASSERT_LE(out.duty, 1.0);
      ASSERT_GE(out.pi.integrator, 0.0);
      ASSERT_LE(out.pi.integrator, 1.0);
      pi = out.pi;
    }
  }
}

// -------------------------------------------------------------- zero crossing

TEST(OnZeroCross, EqualTimeRuleSchedulesCommutation) {
  CommutationState s;
  s.mode = Mode::kClosedLoop;
  s.t_last_commutation = 10.000e-3;
  const auto next = on_zero_cross(s, 10.300e-3, 11);
  ASSERT_TRUE(next.t_next_commutation.has_value());
  EXPECT_NEAR(*next.t_next_commutation, 10.600e-3, 1e-12);
  ASSERT_TRUE(next.t_zero_cross.has_value());
  EXPECT_DOUBLE_EQ(*next.t_zero_cross, 10.300e-3);
  EXPECT_NEAR(next.speed_estimate, 60.0 / (6.0 * 0.6e-3) / 11.0, 1e-9);
}

TEST(OnZeroCross, SecondCrossingInSectorIsSpurious) {
  CommutationState s;
  s.mode = Mode::kClosedLoop;
  s.t_last_commutation = 0.0;
  s = on_zero_cross(s, 1e-3, 2);
  EXPECT_THROW(on_zero_cross(s, 1.2e-3, 2), SpuriousZeroCross);
}

TEST(OnZeroCross, OnlyValidInClosedLoop) {
  CommutationState s;
  s.mode = Mode::kOpenLoopRamp;
  EXPECT_THROW(on_zero_cross(s, 1e-3, 2), std::logic_error);
}

TEST(RpmFromSectorPeriod, OneMillisecondElevenPolePairs) {
  EXPECT_NEAR(rpm_from_sector_period(1e-3, 11), 909.0909, 1e-3);
}

// --------------------------------------------------------------- frame handler

TEST(EscFrames, SetSpeedUpdatesTargetAndAcks) {
  EscFirmware esc({}, {});
  const auto reply = comm::decode_frame(esc.handle_frame(comm::encode_frame(comm::make_set_speed(1, 4000))));
  EXPECT_EQ(reply.command, 0x01 | comm::kAckBit);
  EXPECT_EQ(esc.state().target_speed, 4000.0);
}

TEST(EscFrames, CorruptCrcLeavesStateAndRepliesError) {
  EscFirmware esc({}, {});
  auto bytes = comm::encode_frame(comm::make_set_speed(1, 4000));
  bytes[3] ^= 0x01;
  const auto reply = comm::decode_frame(esc.handle_frame(bytes));
  EXPECT_EQ(reply.command, comm::kErrorReply);
  ASSERT_EQ(reply.payload.size(), 1U);
  EXPECT_EQ(reply.payload[0], static_cast<std::uint8_t>(comm::ErrorCode::kCrc));
  EXPECT_EQ(esc.state().target_speed, 0.0);
}

TEST(EscFrames, UnknownCommandAndWrongAddress) {
  EscFirmware esc({}, {});
  auto unknown = comm::decode_frame(esc.handle_frame(comm::encode_frame({1, 0x42, {}})));
  EXPECT_EQ(unknown.payload.at(0), static_cast<std::uint8_t>(comm::ErrorCode::kUnknownCommand));
  auto wrong = comm::decode_frame(esc.handle_frame(comm::encode_frame(comm::make_arm(2))));
  EXPECT_EQ(wrong.payload.at(0), static_cast<std::uint8_t>(comm::ErrorCode::kWrongAddress));
  EXPECT_FALSE(esc.armed());
}

TEST(EscFrames, ArmDisarmAndStatusFlags) {
  EscFirmware esc({}, {});
  esc.handle_frame(comm::encode_frame(comm::make_arm(1)));
  EXPECT_TRUE(esc.armed());
  const auto reply = comm::decode_frame(esc.handle_frame(comm::encode_frame(comm::make_get_status(1))));
  EXPECT_EQ(reply.command, 0x02 | comm::kAckBit);
  EXPECT_EQ(comm::decode_status(reply.payload).flags & kFlagArmed, kFlagArmed);
  esc.handle_frame(comm::encode_frame(comm::make_disarm(1)));
  EXPECT_FALSE(esc.armed());
}

// ------------------------------------------------------------------- startup

TEST(EscStartup, ZeroTargetStaysIdleAndFloating) {
  EscMotorRig rig({}, {});
  rig.esc().arm();
  rig.run(0.2);
  EXPECT_EQ(rig.esc().state().mode, Mode::kIdle);
  EXPECT_TRUE(rig.esc().drive(16.8).is_all_float());
  EXPECT_EQ(rig.speed_rpm(), 0.0);
}

TEST(EscStartup, ReachesClosedLoopWithinHalfSecond) {
  RigConfig rc;
  rc.k_drag = kPropDrag;
  EscMotorRig rig({}, {}, rc);
  rig.esc().arm();
  rig.esc().set_target(4000.0);
  while (rig.esc().state().mode != Mode::kClosedLoop && rig.time() < 1.0) rig.step();
  ASSERT_TRUE(rig.esc().diagnostics().t_closed_loop.has_value());
  EXPECT_LT(*rig.esc().diagnostics().t_closed_loop, 0.5);
  EXPECT_EQ(rig.esc().faults(), 0);
}

TEST(EscStartup, NoSupplyLatchesStartupFault) {
  RigConfig rc;
  rc.vdc = 0.0;
  EscMotorRig rig({}, {}, rc);
  rig.esc().arm();
  rig.esc().set_target(4000.0);
  rig.run(0.01);
  EXPECT_NE(rig.esc().faults() & kFaultStartup, 0);
  EXPECT_TRUE(rig.esc().drive(0.0).is_all_float());
}

TEST(EscStartup, BelowMinimumSpeedReportsUnderspeed) {
  EscMotorRig rig({}, {});
  rig.esc().arm();
  rig.esc().set_target(500.0);
  rig.run(0.05);
  EXPECT_EQ(rig.esc().state().mode, Mode::kIdle);
  EXPECT_NE(rig.esc().status_flags() & kFlagUnderspeed, 0);
}

// ------------------------------------------------------------ steady state

TEST(EscTick, TwentyThousandTicksIsOneSecond) {
  EscMotorRig rig({}, {});
  rig.run(1.0);
  EXPECT_EQ(rig.periods(), 20000U);
  EXPECT_EQ(rig.esc().ticks(), 20000U);
  EXPECT_NEAR(rig.time(), 1.0, 1e-12);
}

TEST(EscTick, LatchedFaultFloatsAllPhasesOnNextTick) {
  auto rig = settled_rig(4000.0, 0.6);
  ASSERT_EQ(rig.esc().state().mode, Mode::kClosedLoop);
  rig.esc().latch_fault(kFaultOvercurrent);
  const auto rec = rig.step();
  EXPECT_EQ(rec.duty, 0.0);
  EXPECT_TRUE(rig.esc().drive(16.8).is_all_float());
}

class EscSteadyState : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { rig_ = new EscMotorRig(settled_rig(4000.0)); }
  static void TearDownTestSuite() { delete rig_; }
  static EscMotorRig* rig_;
};
EscMotorRig* EscSteadyState::rig_ = nullptr;

TEST_F(EscSteadyState, SpeedSettlesWithinTwoPercent) {
  ASSERT_EQ(rig_->esc().faults(), 0);
  EXPECT_NEAR(rig_->speed_rpm(), 4000.0, 0.02 * 4000.0);
}

TEST_F(EscSteadyState, ZeroCrossingSitsAtSectorMidpoint) {
  for (const auto& s : last_sectors(*rig_, 100)) {
    ASSERT_TRUE(s.t_zc.has_value());
    const double len = s.t_end - s.t_start;
    EXPECT_NEAR((*s.t_zc - s.t_start) / len, 0.5, 0.05);
  }
}

TEST_F(EscSteadyState, EqualTimeRuleWithinOneTick) {
  for (const auto& s : last_sectors(*rig_, 100)) {
    ASSERT_TRUE(s.t_zc.has_value());
    EXPECT_NEAR(s.t_end - *s.t_zc, *s.t_zc - s.t_start, kTick);
  }
}

TEST_F(EscSteadyState, CommutationLandsOnTrueSectorBoundary) {
  // Sector k ends at 90 + 60 k electrical degrees of the real rotor.
  for (const auto& s : last_sectors(*rig_, 100)) {
    const double boundary = (90.0 + 60.0 * s.sector) * bldc::kPi / 180.0;
    const double lag = std::remainder(s.theta_end - boundary, bldc::kTwoPi);
    EXPECT_LT(std::abs(lag) / (bldc::kPi / 3.0), 0.05) << "sector " << s.sector;
  }
}

TEST_F(EscSteadyState, SectorPeriodConverges) {
  std::vector<double> d;
  for (const auto& s : last_sectors(*rig_, 100)) d.push_back(s.t_end - s.t_start);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  EXPECT_LT(std::sqrt(var / static_cast<double>(d.size())), 0.02 * mean);
}

TEST_F(EscSteadyState, CommutationRateMatchesSpeed) {
  const std::uint64_t before = rig_->esc().diagnostics().commutations;
  EscMotorRig copy = *rig_;
  copy.run(1.0);
  const double per_second = static_cast<double>(copy.esc().diagnostics().commutations - before);
  const double expected = 6.0 * 2 * 4000.0 / 60.0;
  EXPECT_NEAR(per_second, expected, 0.01 * expected);
}

TEST_F(EscSteadyState, GetStatusReportsSpeed) {
  EscMotorRig copy = *rig_;
  const auto reply = comm::decode_frame(copy.esc().handle_frame(comm::encode_frame(comm::make_get_status(1))));
  const auto st = comm::decode_status(reply.payload);
  EXPECT_NEAR(st.speed_rpm, 4000.0, 0.02 * 4000.0);
  EXPECT_NE(st.flags & kFlagClosedLoop, 0);
}

class EscSpeedSweep : public ::testing::TestWithParam<double> {};

TEST_P(EscSpeedSweep, EstimateTracksTrueSpeed) {
  const double rpm = GetParam();
  auto rig = settled_rig(rpm);
  ASSERT_EQ(rig.esc().faults(), 0);
  for (const auto& s : last_sectors(rig, 60)) {
    EXPECT_NEAR(s.speed_est, s.speed_true, 0.02 * s.speed_true);
  }
  EXPECT_NEAR(rig.speed_rpm(), rpm, 0.02 * rpm);
}

INSTANTIATE_TEST_SUITE_P(Steady, EscSpeedSweep, ::testing::Values(1500.0, 3000.0, 5000.0, 6500.0, 8000.0));

TEST(EscStep, SpeedStepSettlesWithoutGrowingOscillation) {
  auto rig = settled_rig(4000.0, 1.0);
  rig.esc().set_target(4500.0);
  std::vector<double> err;
  for (int k = 0; k < 10000; ++k) err.push_back(rig.step().speed_true - 4500.0);
  // Settled inside 2% over the last 0.2 s.
  for (std::size_t k = err.size() - 4000; k < err.size(); ++k) ASSERT_LT(std::abs(err[k]), 0.02 * 4500.0);
  // Peak deviation in the second half no larger than in the first.
  const auto mid = err.begin() + 5000;
  auto peak = [](auto a, auto b) {
    double m = 0.0;
    for (auto it = a; it != b; ++it) m = std::max(m, std::abs(*it));
    return m;
  };
  EXPECT_LE(peak(mid, err.end()), peak(err.begin(), mid));
}

TEST(EscDeterminism, IdenticalRunsProduceIdenticalTraces) {
  auto trace = [] {
    RigConfig rc;
    rc.k_drag = kPropDrag;
    EscMotorRig rig({}, {}, rc);
    rig.esc().arm();
    rig.esc().set_target(3000.0);
    std::ostringstream out;
    rig.run(0.5, [&](const RigRecord& r) { write_bench_row(out, r); });
    return out.str();
  };
  EXPECT_EQ(trace(), trace());
}

TEST(EscBench, HeaderListsColumns) {
  std::ostringstream out;
  write_bench_header(out);
  EXPECT_EQ(out.str(), "t,sector,duty,floating_v,zc_flag,speed_est,speed_true,i_dc\n");
}
