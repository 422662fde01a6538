#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace eraid {

// Length of the zlib (deflate, default level) stream for `data`, clamped to the
// input length: a block that does not shrink is stored raw.
std::uint32_t deflate_len(std::span<const std::uint8_t> data);

inline double block_ratio(std::uint32_t stored_len) {
  return stored_len == 0 ? 0.0 : 4096.0 / static_cast<double>(stored_len);
}

}  // namespace eraid
