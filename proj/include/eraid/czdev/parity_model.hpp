#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "eraid/czdev/device.hpp"

namespace eraid {

// How a modeled-mode device sizes an XOR parity block, which has no target
// ratio of its own.
enum class ParityPolicy : std::uint8_t {
  linkage,         // alpha_pty = 1 + (alpha_usr - 1) / 4
  incompressible,  // parity always stored at 4096
  same_as_data,    // parity compresses like the data it covers
};

std::string_view parity_policy_name(ParityPolicy p);
ParityPolicy parity_policy_from(std::string_view name);

double linked_parity_ratio(double alpha_usr);

// Size hint for a parity block covering data blocks of the given stored
// lengths (0 = unmapped, counted as a perfectly compressible zero block).
SizeHint parity_hint(std::span<const std::uint32_t> data_lens, ParityPolicy policy);

}  // namespace eraid
