#include "eraid/czdev/compressor.hpp"

#include <zlib.h>

#include <vector>

#include "eraid/error.hpp"

namespace eraid {

std::uint32_t deflate_len(std::span<const std::uint8_t> data) {
  thread_local std::vector<Bytef> scratch;
  const uLong bound = compressBound(static_cast<uLong>(data.size()));
  if (scratch.size() < bound) scratch.resize(bound);
  uLongf out_len = bound;
  const int rc = compress2(scratch.data(), &out_len, data.data(),
                           static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) raise(Errc::invalid_argument, "zlib compress2 failed");
  if (out_len > data.size()) out_len = data.size();
  return static_cast<std::uint32_t>(out_len);
}

}  // namespace eraid
