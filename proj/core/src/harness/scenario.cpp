#include "hexastack/harness/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "hexastack/errors.hpp"
#include "hexastack/harness/config.hpp"

namespace hexastack::harness {
namespace {

struct EventSpec {
  EventKind kind;
  const char* name;
  std::size_t arity;
};

constexpr EventSpec kEvents[] = {
    {EventKind::kArm, "ARM", 0},          {EventKind::kTakeoff, "TAKEOFF", 1},
    {EventKind::kHover, "HOVER", 1},      {EventKind::kSetAttitude, "SET_ATTITUDE", 3},
    {EventKind::kForward, "FORWARD", 2},  {EventKind::kYawTo, "YAW_TO", 1},
    {EventKind::kLand, "LAND", 0},        {EventKind::kDisarm, "DISARM", 0},
    {EventKind::kManual, "MANUAL", 5},
};

const EventSpec& spec_of(EventKind kind) {
  for (const auto& s : kEvents) {
    if (s.kind == kind) return s;
  }
  return kEvents[0];
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string where(const Document& doc, int line) { return " (" + doc.source + ":" + std::to_string(line) + ")"; }

double number(const Document& doc, const std::string& key, const Entry& e, std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end || !std::isfinite(v)) {
    throw ParseError(doc.source + ":" + std::to_string(e.line) + ": " + key + ": expected a number, got '" +
                     std::string(s) + "'");
  }
  return v;
}

bool is_attitude(EventKind k) {
  return k == EventKind::kSetAttitude || k == EventKind::kForward || k == EventKind::kYawTo;
}

}  // namespace

const char* to_string(EventKind kind) { return spec_of(kind).name; }

std::string Event::describe() const {
  std::string s = to_string(kind);
  for (double a : args) s += " " + format_double(a);
  return s;
}

const char* to_string(bldc::Tier tier) { return tier == bldc::Tier::kSwitched ? "switched" : "averaged"; }

bldc::Tier parse_fidelity(const std::string& text) {
  const auto t = lower(text);
  if (t == "switched") return bldc::Tier::kSwitched;
  if (t == "averaged") return bldc::Tier::kAveraged;
  throw ValidationError("scenario.fidelity: expected switched or averaged, got '" + text + "'");
}

const char* to_string(airframe::Mount mount) {
  switch (mount) {
    case airframe::Mount::kFree: return "free";
    case airframe::Mount::kGimbalRoll: return "gimbal_roll";
    case airframe::Mount::kGimbalPitch: return "gimbal_pitch";
    case airframe::Mount::kGimbalYaw: return "gimbal_yaw";
    case airframe::Mount::kFixed: return "fixed";
  }
  return "?";
}

void Scenario::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ValidationError(key + ": " + why); };
  if (name.empty()) fail("scenario.name", "must not be empty");
  if (!(payload_kg >= 0.0 && payload_kg <= 4.0)) fail("scenario.payload_kg", "must be within [0, 4] kg");
  if (!(duration > 0.0)) fail("scenario.duration", "must be > 0");
  if (telemetry_every < 1) fail("scenario.telemetry_every", "must be >= 1");
  bool took_off = false;
  double last = -1.0;
  for (const auto& e : timeline) {
    const std::string key = "timeline." + format_double(e.t);
    if (!(e.t >= 0.0)) fail(key, "event time must be >= 0");
    if (!(e.t > last)) fail(key, "timeline must be strictly increasing in t");
    if (e.t > duration) fail(key, "event after scenario.duration");
    last = e.t;
    if (e.args.size() != spec_of(e.kind).arity) fail(key, std::string(to_string(e.kind)) + ": wrong argument count");
    switch (e.kind) {
      case EventKind::kTakeoff:
        if (!(e.args[0] > 0.0)) fail(key, "TAKEOFF altitude must be > 0");
        took_off = true;
        break;
      case EventKind::kHover:
        if (!(e.args[0] >= 0.0)) fail(key, "HOVER duration must be >= 0");
        break;
      case EventKind::kForward:
        if (!(e.args[1] > 0.0)) fail(key, "FORWARD duration must be > 0");
        break;
      case EventKind::kManual:
        if (!(e.args[3] >= 0.0)) fail(key, "MANUAL throttle must be >= 0");
        if (!(e.args[4] > 0.0)) fail(key, "MANUAL duration must be > 0");
        break;
      default: break;
    }
    if (is_attitude(e.kind) && !took_off) fail(key, std::string(to_string(e.kind)) + " before TAKEOFF");
  }
}

Scenario parse_scenario(const Document& doc) {
  Scenario sc;
  std::set<std::string> seen;
  for (const auto& section : doc.sections) {
    if (section.name == "scenario") {
      for (const auto& e : section.entries) {
        const std::string key = "scenario." + e.key;
        if (!seen.insert(key).second) throw ValidationError(key + ": duplicate key" + where(doc, e.line));
        if (e.key == "name") {
          sc.name = e.value;
        } else if (e.key == "fidelity") {
          sc.fidelity = parse_fidelity(e.value);
        } else if (e.key == "payload_kg") {
          sc.payload_kg = number(doc, key, e, e.value);
        } else if (e.key == "duration") {
          sc.duration = number(doc, key, e, e.value);
        } else if (e.key == "seed") {
          std::uint64_t v = 0;
          const auto* end = e.value.data() + e.value.size();
          const auto r = std::from_chars(e.value.data(), end, v);
          if (r.ec != std::errc{} || r.ptr != end) {
            throw ParseError(doc.source + ":" + std::to_string(e.line) + ": " + key +
                             ": expected an unsigned integer, got '" + e.value + "'");
          }
          sc.seed = v;
        } else if (e.key == "telemetry_every") {
          const double v = number(doc, key, e, e.value);
          if (v != std::floor(v) || v < 1 || v > 1e9) throw ValidationError(key + ": must be a positive integer");
          sc.telemetry_every = static_cast<int>(v);
        } else if (e.key == "stop_on_depletion") {
          if (e.value != "true" && e.value != "false") throw ValidationError(key + ": expected true or false");
          sc.stop_on_depletion = e.value == "true";
        } else if (e.key == "mount") {
          const auto v = lower(e.value);
          bool ok = false;
          for (auto m : {airframe::Mount::kFree, airframe::Mount::kGimbalRoll, airframe::Mount::kGimbalPitch,
                         airframe::Mount::kGimbalYaw, airframe::Mount::kFixed}) {
            if (v == to_string(m)) {
              sc.mount = m;
              ok = true;
            }
          }
          if (!ok) throw ValidationError(key + ": unknown mount '" + e.value + "'");
        } else {
          throw ValidationError(key + ": unknown key" + where(doc, e.line));
        }
      }
    } else if (section.name == "timeline") {
      for (const auto& e : section.entries) {
        Event ev;
        ev.t = number(doc, "timeline", e, e.key);
        std::istringstream words(e.value);
        std::string word;
        words >> word;
        bool known = false;
        for (const auto& s : kEvents) {
          if (word == s.name) {
            ev.kind = s.kind;
            known = true;
          }
        }
        if (!known) throw ValidationError("timeline." + e.key + ": unknown event '" + word + "'" + where(doc, e.line));
        while (words >> word) ev.args.push_back(number(doc, "timeline." + e.key, e, word));
        sc.timeline.push_back(std::move(ev));
      }
    } else {
      throw ValidationError(section.name + ": unknown section" + where(doc, section.line));
    }
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(load_sectioned_file(path)); }

}  // namespace hexastack::harness
