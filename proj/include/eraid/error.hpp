#pragma once

#include <exception>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eraid {

enum class Errc {
  out_of_space,
  device_offline,
  out_of_range,
  empty_range,
  journal_full,
  degraded_reject,
  data_loss,
  ratio_unavailable,
  unreachable_ratio,
  corpus_too_small,
  config_invalid,
  infeasible,
  corrupt_image,
  wrong_level,
  invalid_argument,
};

std::string_view errc_name(Errc code);

// All recoverable engine errors. The code names the condition; the message
// carries the context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& what);

// Thrown by the fault injector to emulate a power cut between two device
// operations. Deliberately not an Error: nothing in the engine catches it.
class SimulatedCrash : public std::exception {
 public:
  const char* what() const noexcept override { return "simulated crash"; }
};

}  // namespace eraid
