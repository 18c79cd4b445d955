#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hexastack {

// Base of every error raised by the simulator. kind() is the stable,
// machine-readable name printed by the CLI on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  std::string_view kind() const noexcept { return kind_; }

 private:
  std::string_view kind_;
};

#define HEXASTACK_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  }

// bldc plant
HEXASTACK_DEFINE_ERROR(CurrentLimitFault);
HEXASTACK_DEFINE_ERROR(NonFiniteState);

// esc firmware
HEXASTACK_DEFINE_ERROR(InvalidSector);
HEXASTACK_DEFINE_ERROR(SpuriousZeroCross);

// comm fabric
HEXASTACK_DEFINE_ERROR(CrcError);
HEXASTACK_DEFINE_ERROR(MalformedLength);
HEXASTACK_DEFINE_ERROR(NoAckError);
HEXASTACK_DEFINE_ERROR(BusBusy);

// flight controller
HEXASTACK_DEFINE_ERROR(NotStationary);
HEXASTACK_DEFINE_ERROR(NoOscillation);
HEXASTACK_DEFINE_ERROR(DisarmedError);

// airframe
HEXASTACK_DEFINE_ERROR(CalibrationFailure);

// harness
HEXASTACK_DEFINE_ERROR(ParseError);
HEXASTACK_DEFINE_ERROR(ValidationError);
HEXASTACK_DEFINE_ERROR(SimulationFault);
HEXASTACK_DEFINE_ERROR(EmptyLog);

#undef HEXASTACK_DEFINE_ERROR

}  // namespace hexastack
