#include "eraid/czdev/parity_model.hpp"

#include <string>

#include "eraid/error.hpp"

namespace eraid {

std::string_view parity_policy_name(ParityPolicy p) {
  switch (p) {
    case ParityPolicy::linkage: return "linkage";
    case ParityPolicy::incompressible: return "incompressible";
    case ParityPolicy::same_as_data: return "same";
  }
  return "?";
}

ParityPolicy parity_policy_from(std::string_view name) {
  if (name == "linkage") return ParityPolicy::linkage;
  if (name == "incompressible") return ParityPolicy::incompressible;
  if (name == "same") return ParityPolicy::same_as_data;
  raise(Errc::config_invalid, "unknown parity policy '" + std::string(name) + "'");
}

double linked_parity_ratio(double alpha_usr) { return 1.0 + (alpha_usr - 1.0) / 4.0; }

SizeHint parity_hint(std::span<const std::uint32_t> data_lens, ParityPolicy policy) {
  if (policy == ParityPolicy::incompressible) return SizeHint::of_len(kBlockSize);
  std::uint64_t bytes = 0;
  std::uint64_t mapped = 0;
  for (std::uint32_t len : data_lens) {
    if (len == 0) continue;
    bytes += len;
    ++mapped;
  }
  if (mapped == 0) return SizeHint::of_len(kBlockSize);
  const double alpha_usr =
      static_cast<double>(mapped * kBlockSize) / static_cast<double>(bytes);
  if (policy == ParityPolicy::same_as_data) return SizeHint::of_ratio(alpha_usr);
  return SizeHint::of_ratio(linked_parity_ratio(alpha_usr));
}

}  // namespace eraid
