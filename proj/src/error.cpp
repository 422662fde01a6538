#include "eraid/error.hpp"

namespace eraid {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::out_of_space: return "OutOfSpace";
    case Errc::device_offline: return "DeviceOffline";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::empty_range: return "EmptyRange";
    case Errc::journal_full: return "JournalFull";
    case Errc::degraded_reject: return "DegradedReject";
    case Errc::data_loss: return "DataLoss";
    case Errc::ratio_unavailable: return "RatioUnavailable";
    case Errc::unreachable_ratio: return "UnreachableRatio";
    case Errc::corpus_too_small: return "CorpusTooSmall";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::infeasible: return "Infeasible";
    case Errc::corrupt_image: return "CorruptImage";
    case Errc::wrong_level: return "WrongLevel";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace eraid
